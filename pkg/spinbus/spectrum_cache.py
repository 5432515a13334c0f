"""
Memo of unit characterizations for one run

A circuit sweep revisits the same (unit, f_x) points across subcommand
stages; each character costs dozens of diagonalizations. Entries live for
the run and are never evicted: a sweep holds tens of characters at most.
"""

from typing import TYPE_CHECKING, Dict, Optional, Sequence

from .utils.helpers import canonical_json

if TYPE_CHECKING:
    from .circuit_map import CircuitUnitParams, UnitCharacter


class CharacterCache:
    """
    Characters keyed by everything that determines them: unit parameters,
    x-loop bias, z-loop grid and starting basis size.

    Attributes:
        hits (int): lookups answered from the memo
        misses (int): lookups that had to be computed
    """

    def __init__(self):
        self._entries: Dict[str, "UnitCharacter"] = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(params: "CircuitUnitParams", f_x: float, grid: Sequence[float], basis_size: int) -> str:
        return canonical_json({
            "params": params.to_dict(),
            "f_x": float(f_x),
            "grid": [float(v) for v in grid],
            "basis_size": int(basis_size),
        })

    def lookup(self, params, f_x, grid, basis_size) -> Optional["UnitCharacter"]:
        """The stored character, or None (counted as a miss)."""
        character = self._entries.get(self.key(params, f_x, grid, basis_size))
        if character is None:
            self.misses += 1
        else:
            self.hits += 1
        return character

    def store(self, params, f_x, grid, basis_size, character: "UnitCharacter"):
        """UnitCharacter is frozen, so the object itself is kept."""
        self._entries[self.key(params, f_x, grid, basis_size)] = character

    def __len__(self):
        return len(self._entries)

    def get_stats(self) -> dict:
        return {"size": len(self._entries), "hits": self.hits, "misses": self.misses}
