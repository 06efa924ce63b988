"""``schmidtkit`` command line.

Every verb reads one JSON document (``--input``, default standard input) and
writes JSON or CSV (``--output``, default standard output). Failures print a
JSON error object with a stable ``code`` to standard output and exit with 2
(bad usage or input) or 3 (numerical non-convergence).
"""
import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

import jsonschema
import numpy as np

from . import cpmaps, fcs, io, itpfi, nonlocality, schmidt
from .exceptions import ConvergenceError, ValidationError
from .linalg import DEFAULT_TOL, Tolerance
from .sampling import rng_for
from .schmidt import FiniteBipartiteState
from .states import DensityOperator

log = logging.getLogger("schmidtkit")

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3
DEFAULT_RN_SAMPLES = 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Output:
    """Result of a verb: either a JSON-able object or CSV text."""

    def __init__(self, payload, csv: bool = False):
        self.payload, self.csv = payload, csv

    def text(self) -> str:
        return self.payload if self.csv else io.dumps(self.payload)


def _params(pairs: List[str]) -> Dict[str, str]:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {item!r}")
        out[key] = value
    return out


def _int_param(params, key, default):
    try:
        return int(params.get(key, default))
    except ValueError:
        raise ValidationError(f"parameter {key} must be an integer") from None


def _float_param(params, key, default):
    try:
        return float(params.get(key, default))
    except ValueError:
        raise ValidationError(f"parameter {key} must be a number") from None


def _bipartite(doc) -> FiniteBipartiteState:
    io.validate(doc, "state")
    state = io.state_from_json(doc)
    if isinstance(state, DensityOperator) and len(state.dims) != 2:
        raise ValidationError("a bipartite state needs dims [dA, dB]")
    return FiniteBipartiteState.coerce(state)


def cmd_schmidt(doc, args, params, tol):
    return Output(schmidt.schmidt_rank_all_ways(_bipartite(doc), tol).to_dict())


def cmd_compress(doc, args, params, tol):
    omega = _bipartite(doc)
    comp = schmidt.minimal_compression(omega, tol)
    return Output({"k": comp.k, "c_a": io.cpmap_to_json(comp.c_a), "c_b": io.cpmap_to_json(comp.c_b),
                   "psi": io.state_to_json(comp.psi), "max_deviation": comp.max_deviation(omega)})


def cmd_factor(doc, args, params, tol):
    omega = _bipartite(doc)
    if "k" in params:
        k = _int_param(params, "k", 0)
    else:
        k = schmidt.schmidt_rank(omega, tol)
    result = schmidt.factor_through(omega, k, tol)
    if isinstance(result, schmidt.Infeasible):
        return Output({"feasible": False, "k": result.k, "witness_rank": result.witness_rank})
    return Output({"feasible": True, "k": result.k, "alpha": io.cpmap_to_json(result.alpha),
                   "beta": io.cpmap_to_json(result.beta), "max_deviation": result.max_deviation(omega)})


def _sweep_csv(spec: fcs.FCSSpec, a: np.ndarray, b: np.ndarray, length: int) -> str:
    rows = ["window_length,value"]
    ident = np.eye(spec.d)
    for ell in range(2, length + 1):
        value = fcs.evaluate(spec, [a] + [ident] * (ell - 2) + [b])
        rows.append(f"{ell},{value.real:.9g}")
    return "\n".join(rows) + "\n"


def cmd_fcs_eval(doc, args, params, tol):
    io.validate(doc, "fcs_spec")
    spec = io.fcs_from_json(doc)
    if args.window is not None:
        if "a" not in doc:
            raise ValidationError("a sweep needs the observable 'a' (and optionally 'b')")
        a = io.matrix_from_json(doc["a"], spec.d, "a")
        b = io.matrix_from_json(doc["b"], spec.d, "b") if "b" in doc else a
        for name, m in (("a", a), ("b", b)):
            if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
                raise ValidationError(f"sweep observable {name} must be Hermitian")
        if not 2 <= args.window <= fcs.MAX_WINDOW:
            raise ValidationError(f"--window must lie in [2, {fcs.MAX_WINDOW}]")
        return Output(_sweep_csv(spec, a, b, args.window), csv=True)
    window = [io.matrix_from_json(m, spec.d, "window operator") for m in doc.get("window", [])]
    value = fcs.evaluate(spec, window)
    return Output({"value_re": value.real, "value_im": value.imag, "window_length": len(window)})


def cmd_fcs_minimize(doc, args, params, tol):
    io.validate(doc, "fcs_spec")
    spec = io.fcs_from_json(doc)
    reduced = fcs.minimize_representation(spec, tol, seed=args.seed)
    pure, spectrum = fcs.purity_heuristic(reduced)
    return Output({"original_bond_dim": spec.n, "bond_dim": reduced.n,
                   "certificate": fcs.CERTIFICATE_LABEL, "purity_heuristic": pure,
                   "transfer_spectrum_moduli": sorted(np.abs(spectrum).tolist(), reverse=True)[:4],
                   "spec": io.fcs_to_json(reduced)})


def cmd_itpfi(doc, args, params, tol):
    io.validate(doc, "itpfi_sequence")
    seq = io.sequence_from_json(doc)
    if args.kmax is not None:
        seq = seq.with_horizon(args.kmax)
    c = _float_param(params, "c", doc.get("c", 1.0))
    return Output(itpfi.classify(seq, c).to_dict())


def cmd_chsh(doc, args, params, tol):
    omega = _bipartite(doc)
    restarts = 20 if args.restarts is None else args.restarts
    result = nonlocality.chsh_value(omega, restarts=restarts, seed=args.seed)
    return Output({"beta": result.beta, "observables": result.observables.to_dict(),
                   "restarts": restarts, "seed": args.seed})


def cmd_correlations(doc, args, params, tol):
    io.validate(doc, "correlations_input")
    omega = _bipartite(doc["state"])
    da, db = omega.dims
    pa = [[io.matrix_from_json(m, da, "Alice POVM element") for m in povm] for povm in doc["povms_a"]]
    pb = [[io.matrix_from_json(m, db, "Bob POVM element") for m in povm] for povm in doc["povms_b"]]
    table = nonlocality.correlations_from_model(omega, pa, pb, tol).validate()
    return Output(table.to_csv(), csv=True)


def cmd_rn_roundtrip(doc, args, params, tol):
    if "choi_re" in doc:
        io.validate(doc, "cpmap")
        t = io.cpmap_from_json(doc)
    else:
        io.validate(doc, "state")
        state = io.state_from_json(doc)
        rho = state if isinstance(state, DensityOperator) else state.density()
        t = cpmaps.state_map(rho)
    samples = _int_param(params, "samples", DEFAULT_RN_SAMPLES)
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    dil = cpmaps.minimal_stinespring(t, tol)
    worst = cpmaps.radon_nikodym_roundtrip(t, samples, rng_for(args.seed, "rn-roundtrip"), tol)
    return Output({"samples": samples, "space_dim": dil.space_dim, "env_dim": dil.env_dim,
                   "max_deviation": worst})


VERBS: Dict[str, Callable] = {
    "schmidt": cmd_schmidt,
    "compress": cmd_compress,
    "factor": cmd_factor,
    "fcs-eval": cmd_fcs_eval,
    "fcs-minimize": cmd_fcs_minimize,
    "itpfi-classify": cmd_itpfi,
    "chsh": cmd_chsh,
    "correlations": cmd_correlations,
    "rn-roundtrip": cmd_rn_roundtrip,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schmidtkit", description="Schmidt-rank toolkit for finite bipartite systems.")
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--input", help="input JSON file (default: standard input)")
    p.add_argument("--output", help="output file (default: standard output)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, help="rank and PSD tolerance (default 1e-9)")
    p.add_argument("--restarts", type=int, help="seesaw restarts for chsh (default 20)")
    p.add_argument("--kmax", type=int, help="horizon override for itpfi-classify")
    p.add_argument("--window", type=int, help="fcs-eval: two-point sweep up to this window length (CSV)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="verb parameter, e.g. k=2 (factor), c=0.5 (itpfi-classify), samples=50 (rn-roundtrip)")
    return p


def _configure_logging():
    level = os.environ.get("SCHMIDTKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _error(code: str, message: str, status: int, stdout) -> int:
    stdout.write(io.dumps({"error": {"code": code, "message": message}}))
    return status


def run(argv: Optional[List[str]] = None, stdin=None, stdout=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
        params = _params(args.param)
        tol = DEFAULT_TOL if args.tol is None else Tolerance(args.tol, args.tol)
        if args.restarts is not None and args.restarts < 1:
            raise ValidationError("--restarts must be >= 1")
    except UsageError as exc:
        return _error("usage_error", str(exc), EXIT_INVALID, stdout)
    except ValidationError as exc:
        return _error("validation_error", str(exc), EXIT_INVALID, stdout)
    try:
        text = stdin.read() if args.input is None else open(args.input, encoding="utf-8").read()
    except OSError as exc:
        return _error("unreadable_input", str(exc), EXIT_INVALID, stdout)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return _error("invalid_json", str(exc), EXIT_INVALID, stdout)
    log.info("verb=%s seed=%d", args.verb, args.seed)
    try:
        out = VERBS[args.verb](doc, args, params, tol)
        text = out.text()
    except jsonschema.ValidationError as exc:
        return _error("schema_mismatch", exc.message, EXIT_INVALID, stdout)
    except ValidationError as exc:
        return _error("validation_error", str(exc), EXIT_INVALID, stdout)
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        return _error("non_convergence", str(exc), EXIT_NONCONVERGENCE, stdout)
    except (KeyError, TypeError, ValueError) as exc:
        return _error("validation_error", f"malformed input: {exc}", EXIT_INVALID, stdout)
    if args.output is None:
        stdout.write(text)
    else:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            return _error("unwritable_output", str(exc), EXIT_INVALID, stdout)
    return EXIT_OK


def main() -> None:
    _configure_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
