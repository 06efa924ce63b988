"""JSON round-tripping for states, maps, specs and spectrum sequences.

Complex arrays are stored as separate ``re``/``im`` lists flattened in
row-major order; ``im`` may be omitted for real data.
"""
import json
import math
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .cpmaps import CPMap
from .exceptions import ValidationError
from .fcs import FCSSpec
from .itpfi import SchmidtSpectrumSequence
from .states import BipartiteVector, DensityOperator

SIGNIFICANT_DIGITS = 9
# documents carry rounded decimals (our own output keeps 9 significant digits),
# so norms, traces and spec invariants read from JSON are checked at this level
JSON_TOL = 1e-6


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("schmidtkit").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate(obj, schema_name: str):
    """Raise :class:`jsonschema.ValidationError` when ``obj`` does not match."""
    jsonschema.validate(obj, load_schema(schema_name))


def _complex(re, im, count: int, label: str) -> np.ndarray:
    re = np.asarray(re, dtype=float)
    im = np.zeros_like(re) if im is None else np.asarray(im, dtype=float)
    if re.shape != im.shape:
        raise ValidationError(f"{label}: re and im have different lengths")
    if re.size != count:
        raise ValidationError(f"{label}: expected {count} entries, got {re.size}")
    return re + 1j * im


def _split(z: np.ndarray, re_key: str = "re", im_key: str = "im") -> dict:
    z = np.asarray(z, dtype=complex).reshape(-1)
    return {re_key: z.real.tolist(), im_key: z.imag.tolist()}


def _near_one(x, label: str):
    if abs(x - 1.0) > JSON_TOL:
        raise ValidationError(f"{label} is {complex(x).real:.12g}, not 1")
    return x


def matrix_from_json(obj: dict, dim: int, label: str = "matrix") -> np.ndarray:
    return _complex(obj["re"], obj.get("im"), dim * dim, label).reshape(dim, dim)


def matrix_to_json(m) -> dict:
    return _split(m)


def state_from_json(obj: dict):
    """``BipartiteVector`` or ``DensityOperator``, told apart by the entry count."""
    dims = tuple(int(d) for d in obj["dims"])
    total = int(np.prod(dims))
    count = len(obj["re"])
    if len(dims) == 2 and count == total:
        v = _complex(obj["re"], obj.get("im"), total, "vector")
        return BipartiteVector(dims, v / _near_one(np.linalg.norm(v), "vector norm"))
    if count == total * total:
        m = _complex(obj["re"], obj.get("im"), total * total, "density").reshape(total, total)
        m = m / _near_one(np.trace(m), "density trace")
        return DensityOperator(m, dims if len(dims) == 2 else None)
    raise ValidationError(f"{count} entries fit neither a vector nor a density operator for dims {list(dims)}")


def state_to_json(state) -> dict:
    if isinstance(state, BipartiteVector):
        return {"dims": list(state.dims), **_split(state.amplitudes)}
    if isinstance(state, DensityOperator):
        dims = list(state.dims) if state.dims is not None else [state.dim]
        return {"dims": dims, **_split(state.matrix)}
    raise ValidationError(f"cannot serialise {type(state).__name__} as a state")


def cpmap_from_json(obj: dict) -> CPMap:
    i, o = int(obj["in_dim"]), int(obj["out_dim"])
    size = i * o
    choi = _complex(obj["choi_re"], obj.get("choi_im"), size * size, "choi").reshape(size, size)
    return CPMap(i, o, choi)


def cpmap_to_json(t: CPMap) -> dict:
    return {"in_dim": t.in_dim, "out_dim": t.out_dim, **_split(t.choi, "choi_re", "choi_im")}


def fcs_from_json(obj: dict) -> FCSSpec:
    d, n = int(obj["d"]), int(obj["n"])
    size = d * n * n
    choi = _complex(obj["transfer_choi_re"], obj.get("transfer_choi_im"), size * size,
                    "transfer_choi").reshape(size, size)
    rho = _complex(obj["rho_re"], obj.get("rho_im"), n * n, "rho").reshape(n, n)
    rho = rho / _near_one(np.trace(rho), "rho trace")
    return FCSSpec(d, n, CPMap(d * n, n, choi), DensityOperator(rho)).validate(JSON_TOL)


def fcs_to_json(spec: FCSSpec) -> dict:
    return {"d": spec.d, "n": spec.n,
            **_split(spec.transfer.choi, "transfer_choi_re", "transfer_choi_im"),
            **_split(spec.rho.matrix, "rho_re", "rho_im")}


def sequence_from_json(obj: dict) -> SchmidtSpectrumSequence:
    return SchmidtSpectrumSequence(
        obj["family_tag"], obj.get("values", []), int(obj.get("horizon", 1000)),
        weights=obj.get("weights"), ratio=obj.get("ratio"),
        trivial_prefix=int(obj.get("trivial_prefix", 0)))


def sequence_to_json(seq: SchmidtSpectrumSequence) -> dict:
    if seq.family_tag == "generator":
        raise ValidationError("generator sequences cannot be serialised")
    out = {"family_tag": seq.family_tag, "values": seq.values, "horizon": seq.horizon,
           "trivial_prefix": seq.trivial_prefix}
    if seq.family_tag == "geometric":
        out.update(weights=list(seq.weights), ratio=seq.ratio)
    return out


def round_floats(obj, digits: int = SIGNIFICANT_DIGITS):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValidationError("non-finite value in output")
        x = float(f"{x:.{digits}g}")
        return 0.0 if x == 0 else x  # drop negative zero
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, 9 significant digits."""
    return json.dumps(round_floats(obj), sort_keys=True, separators=(",", ":")) + "\n"
