"""Run configuration (INI with dotted keys) and deterministic CSV/JSON writers."""

import configparser
import csv
import hashlib
import json
import os

import numpy as np

from . import __version__
from .errors import ValidationError


class RunConfig:
    """Flat mapping "section.key" -> string with typed, key-naming accessors."""

    def __init__(self, values=None):
        self.values = dict(values or {})

    @classmethod
    def from_file(cls, path):
        cp = configparser.ConfigParser(interpolation=None)
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        return cls({f"{s}.{k}": v.strip() for s in cp.sections() for k, v in cp[s].items()})

    @classmethod
    def from_string(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        return cls({f"{s}.{k}": v.strip() for s in cp.sections() for k, v in cp[s].items()})

    def __contains__(self, key):
        return key in self.values

    def set(self, key, value):
        self.values[key] = str(value)

    def section(self, name):
        p = name + "."
        return {k[len(p):]: v for k, v in self.values.items() if k.startswith(p)}

    def get(self, key, default=None):
        return self.values.get(key, default)

    def str(self, key, default=None):
        v = self.values.get(key, default)
        if v is None:
            raise ValidationError(key, "missing")
        return str(v)

    def float(self, key, default=None):
        v = self.values.get(key, default)
        if v is None:
            raise ValidationError(key, "missing")
        try:
            out = float(v)
        except (TypeError, ValueError):
            raise ValidationError(key, f"not a number: {v!r}") from None
        if not np.isfinite(out):
            raise ValidationError(key, f"not finite: {v!r}")
        return out

    def int(self, key, default=None):
        v = self.values.get(key, default)
        if v is None:
            raise ValidationError(key, "missing")
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ValidationError(key, f"not an integer: {v!r}") from None
        if f != int(f):
            raise ValidationError(key, f"not an integer: {v!r}")
        return int(f)

    def bool(self, key, default=False):
        v = self.values.get(key)
        if v is None:
            return default
        s = str(v).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ValidationError(key, f"not a boolean: {v!r}")

    def floats(self, key, default=None):
        v = self.values.get(key, default)
        if v is None:
            raise ValidationError(key, "missing")
        try:
            return [float(p) for p in str(v).replace(",", " ").split()]
        except ValueError:
            raise ValidationError(key, f"not a list of numbers: {v!r}") from None

    def canonical(self):
        return json.dumps(self.values, sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def fmt(v):
    """Round-trip decimal text for a scalar."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def manifest(cfg, command, seed, outputs, extra=None):
    """Deterministic manifest: no timestamps or host data (wall time goes to timing.json)."""
    out = {"command": command, "version": f"qikdv {__version__}", "config": cfg.values,
           "config_hash": cfg.hash(), "seed": seed, "outputs": sorted(outputs)}
    if extra:
        out.update(extra)
    return out


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
