"""
Helper functions
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor


def as_yaml_tree(data):
    """Copy of a config tree in the shape yaml.safe_load returns: dicts, lists, scalars."""
    if isinstance(data, dict):
        return {str(k): as_yaml_tree(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [as_yaml_tree(i) for i in data]
    return data


def canonical_json(data):
    """Key-sorted, whitespace-free JSON text used for hashing and cache keys."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_hex(data):
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def parallel_map(fn, items, threads=1):
    """
    Apply fn to every item, preserving input order.

    LAPACK releases the GIL, so a thread pool gives real overlap for
    diagonalization-heavy sweeps. Results are collected in input order,
    which keeps reductions identical for any thread count.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
