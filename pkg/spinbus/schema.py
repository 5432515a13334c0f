"""
Field rules and validation for run configs
"""

from .exceptions.errors import ConfigError

_NUMBER = (int, float)


class Schema:
    """
    Typed field rules for one config section.

    Nested sections are Schemas themselves. Unknown keys are rejected,
    missing optional fields take their defaults.
    """

    def __init__(self, name="config"):
        self.name = name
        self.fields = {}           # field_name -> rule dict

    def add_field(self, name, field_type, default=None, required=False, choices=None,
                  minimum=None, item_type=None):
        """
        Add a field.

        Args:
            field_type: python type, tuple of types, or a nested Schema
            choices: allowed values
            minimum: inclusive lower bound for numbers
            item_type: element type for list fields
        """
        self.fields[name] = {
            "type": field_type,
            "default": default,
            "required": required,
            "choices": choices,
            "minimum": minimum,
            "item_type": item_type,
        }
        return self

    def _check_type(self, path, value, field_type):
        if field_type is float or field_type == _NUMBER:
            ok = isinstance(value, _NUMBER) and not isinstance(value, bool)
        elif field_type is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, field_type)
        if not ok:
            expected = getattr(field_type, "__name__", "number")
            raise ConfigError(f"{path} must be {expected}, got {type(value).__name__}")

    def validate(self, record, path=None) -> dict:
        """
        Validate a section and return a new dict with defaults filled in.

        Raises:
            ConfigError: unknown key, missing required field, wrong type,
                value outside choices or below minimum
        """
        path = path or self.name
        if record is None:
            record = {}
        if not isinstance(record, dict):
            raise ConfigError(f"{path} must be a mapping")

        unknown = sorted(set(record) - set(self.fields))
        if unknown:
            raise ConfigError(f"Unknown key(s) in {path}: {', '.join(unknown)}")

        out = {}
        for field, rule in self.fields.items():
            where = f"{path}.{field}"
            if field not in record or record[field] is None:
                if rule["required"]:
                    raise ConfigError(f"Missing required field: {where}")
                default = rule["default"]
                if isinstance(rule["type"], Schema):
                    out[field] = rule["type"].validate(default or {}, where)
                else:
                    out[field] = list(default) if isinstance(default, (list, tuple)) else default
                continue

            value = record[field]
            if isinstance(rule["type"], Schema):
                out[field] = rule["type"].validate(value, where)
                continue

            self._check_type(where, value, rule["type"])
            if rule["item_type"] is not None:
                for i, item in enumerate(value):
                    self._check_type(f"{where}[{i}]", item, rule["item_type"])
                value = [float(v) for v in value] if rule["item_type"] is float else list(value)
            if rule["choices"] is not None and value not in rule["choices"]:
                raise ConfigError(f"{where} must be one of {list(rule['choices'])}, got {value!r}")
            if rule["minimum"] is not None and value < rule["minimum"]:
                raise ConfigError(f"{where} must be >= {rule['minimum']}, got {value}")
            out[field] = float(value) if rule["type"] is float else value

        return out
