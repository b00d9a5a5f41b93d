"""Command-line entry point: ``calibra <subcommand> [options]``.

Results go to stdout or ``--out`` as JSON (or CSV with ``--format csv``).
Exit status is 0 on success, 2 on invalid input (error JSON on stderr) and
3 when an internal consistency check trips.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .calib import (
    CATALOG,
    catalog,
    comass_estimate,
    lagrangian_plane,
    random_frame,
    symplectic_plane,
)
from .exceptions import PreconditionError, TripwireError
from .forms import ComplexKForm, KForm, evaluate, evaluate_complex, power, pullback, pullback_complex
from .rng import make_rng
from .slag import (
    complex_det,
    embed_complex,
    extract_complex,
    phase_verdict,
    preserves_omega_form,
    slag_squeezing_witness,
)
from .squeeze import GroupSpec, nonsqueezing_sweep, rigidity_witness_symplectic, squeeze_search
from .stab import classify_power_preserver
from .symplin import (
    Ellipsoid,
    classify_map,
    k_width_from_width,
    linear_symplectic_width,
    symplectic_residuals,
    symplectic_spectrum,
    williamson,
)

GROUPS = {"sp": "symplectic", "power": "power", "slnc": "slnc", "iso": "isometry"}
# Stream id for the random cylinder basis, kept apart from restart streams.
_CYLINDER_STREAM = 1_000_003


# -- I/O helpers --------------------------------------------------------------


class _Inputs:
    """Reads JSON input files and remembers their bytes for the manifest digest."""

    def __init__(self):
        self.digest = hashlib.sha256()
        self.paths: list[str] = []

    def load(self, path: str) -> Any:
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise PreconditionError(f"cannot read {path}: {e.strerror}") from None
        self.digest.update(raw)
        self.paths.append(path)
        try:
            return json.loads(raw)
        except json.JSONDecodeError as e:
            raise PreconditionError(f"{path} is not valid JSON: {e}") from None


def _matrix(data) -> np.ndarray:
    if isinstance(data, dict):
        if "re" in data:
            return embed_complex(np.asarray(data["re"], float) + 1j * np.asarray(data.get("im", 0.0), float))
        for key in ("matrix", "shape"):
            if key in data:
                data = data[key]
                break
    A = np.asarray(data, dtype=float)
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        raise PreconditionError("expected a finite 2-D matrix")
    return A


def _ellipsoid(data) -> Ellipsoid:
    if isinstance(data, dict) and "shape" in data:
        return Ellipsoid.from_json(data)
    return Ellipsoid.centered(_matrix(data))


def _form(data):
    if not isinstance(data, dict) or "terms" not in data:
        raise PreconditionError("form JSON needs 'dim', 'degree' and 'terms'")
    if any("im" in t for t in data["terms"]):
        return ComplexKForm.from_json(data)
    return KForm.from_json(data)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def dumps(obj) -> str:
    # repr-based float output is the shortest round-trip form.
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return buf.getvalue()


def _flat_rows(result: dict) -> list[dict]:
    out = []
    for k, v in _jsonable(result).items():
        out.append({"key": k, "value": v if not isinstance(v, (list, dict)) else json.dumps(v)})
    return out


# -- subcommands --------------------------------------------------------------
# Each returns (result dict, csv rows or None, extra files {suffix: text}).


def cmd_williamson(args, inp: _Inputs):
    M = _ellipsoid(inp.load(args.ellipsoid or args.matrix)).shape
    W = williamson(M)
    r_sp, r_diag = W.residuals(M)
    res = {"S": W.S, "lambdas": list(W.lambdas), "residuals": {"symplectic": r_sp, "diagonal": r_diag}}
    return res, [{"j": j + 1, "lambda": lam} for j, lam in enumerate(W.lambdas)], {}


def cmd_spectrum(args, inp):
    spec = symplectic_spectrum(_ellipsoid(inp.load(args.ellipsoid)))
    return {"radii": list(spec.radii)}, [{"j": j + 1, "radius": r} for j, r in enumerate(spec.radii)], {}


def cmd_width(args, inp):
    E = _ellipsoid(inp.load(args.ellipsoid))
    w = linear_symplectic_width(E)
    res = {"width": w}
    if args.k is not None:
        if not 1 <= args.k <= E.dim // 2:
            raise PreconditionError(f"k must lie in [1, {E.dim // 2}]")
        res["k"] = args.k
        res["k_width"] = k_width_from_width(w, args.k)
    return res, None, {}


def cmd_classify(args, inp):
    A = _matrix(inp.load(args.matrix))
    cls = classify_map(A, args.tol)
    r_sp, r_anti = symplectic_residuals(A)
    return {"class": cls.value, "residuals": {"symplectic": r_sp, "anti_symplectic": r_anti}}, None, {}


def cmd_power_classify(args, inp):
    A = _matrix(inp.load(args.matrix))
    return classify_power_preserver(A, args.k, args.tol).to_json(), None, {}


def _catalog_form(args):
    params = {}
    if args.k is not None:
        params["k"] = args.k
    if args.theta is not None:
        params["theta"] = args.theta
    return catalog(args.form, args.n, **params)


def cmd_comass(args, inp):
    alpha = _form(inp.load(args.form_file)) if args.form_file else _catalog_form(args)
    if isinstance(alpha, ComplexKForm):
        raise PreconditionError("comass needs a real form; use slag_re for real parts of Omega")
    rep = comass_estimate(alpha, restarts=args.restarts, seed=args.seed, max_iters=args.max_iters)
    res = rep.to_json()
    res["form"] = args.form or args.form_file
    rows = [{"restart": i, "seed": args.seed, "value": v} for i, v in enumerate(rep.restart_values)]
    return res, rows, {}


def _group(args) -> GroupSpec:
    kind = GROUPS[args.group]
    if kind == "power":
        if args.k is None:
            raise PreconditionError("--k is required for the power group")
        return GroupSpec.power_stabilizer(args.n, args.k)
    return GroupSpec(kind, args.n)


def _cylinder(spec: str, G: GroupSpec, args) -> np.ndarray:
    dim = G.dim
    name, _, arg = spec.partition(":")
    if name in ("symplectic", "zk", "lagrangian") and dim % 2:
        raise PreconditionError(f"cylinder {name!r} needs an even-dimensional group")
    if name == "symplectic":
        return symplectic_plane(dim // 2, 1)
    if name == "zk":
        k = args.cylinder_k if args.cylinder_k is not None else args.k
        if k is None or not 1 <= k <= dim // 2:
            raise PreconditionError("cylinder zk needs --cylinder-k (or --k) in [1, n]")
        return symplectic_plane(dim // 2, k)
    if name == "lagrangian":
        return lagrangian_plane(dim // 2)
    if name in ("first", "random"):
        try:
            m = int(arg)
        except ValueError:
            raise PreconditionError(f"cylinder {name}:M needs an integer M, got {arg!r}") from None
        if not 1 <= m <= dim:
            raise PreconditionError(f"cylinder dimension must lie in [1, {dim}]")
        if name == "first":
            return np.eye(dim)[:, :m]
        return random_frame(dim, m, make_rng(args.seed, _CYLINDER_STREAM))
    raise PreconditionError(f"unknown cylinder {spec!r}")


def cmd_squeeze(args, inp):
    G = _group(args)
    L = _cylinder(args.cylinder, G, args)
    res = squeeze_search(
        G, L, r=args.r, restarts=args.restarts, seed=args.seed, budget=args.budget, polish=args.polish
    )
    out = res.to_json()
    out.update({"group": G.to_json(), "cylinder": args.cylinder, "r": args.r, "ratio": res.best_radius / args.r})
    rows = [
        {"restart": i, "seed": args.seed, "radius": rad, "iterations": its}
        for i, (rad, its) in enumerate(zip(res.trace, res.restart_iterations))
    ]
    return out, rows, {".restarts.csv": _csv_text(rows)}


def cmd_sweep(args, inp):
    G = _group(args)
    L = _cylinder(args.cylinder, G, args)
    rep = nonsqueezing_sweep(G, L, trials=args.trials, seed=args.seed, r=args.r)
    out = rep.to_json()
    out.update({"group": G.to_json(), "cylinder": args.cylinder})
    return out, [rep.to_json()], {}


def cmd_witness(args, inp):
    A = _matrix(inp.load(args.matrix))
    if args.kind == "slag":
        w = slag_squeezing_witness(A, args.tol)
        return w.to_json(), None, {}
    w = rigidity_witness_symplectic(A, args.tol, seed=args.seed, attempts=args.attempts)
    if w is None:
        return {"found": False}, None, {}
    out = w.to_json()
    out["found"] = True
    return out, None, {}


def cmd_slag_check(args, inp):
    A = _matrix(inp.load(args.matrix))
    M = extract_complex(A, args.tol)
    out: dict = {"complex_linear": M is not None}
    if M is not None:
        out["det"] = complex_det(A, args.tol)
    out["preserves_omega"] = preserves_omega_form(A, args.tol)
    out["transpose_preserves_omega"] = preserves_omega_form(A.T, args.tol)
    out["phase"] = phase_verdict(A, args.tol).to_json()
    return out, None, {}


def cmd_forms_eval(args, inp):
    a = _form(inp.load(args.form))
    if args.power is not None:
        if isinstance(a, ComplexKForm):
            raise PreconditionError("power needs a real 2-form")
        a = power(a, args.power)
    if args.pullback:
        A = _matrix(inp.load(args.pullback))
        a = pullback_complex(A, a) if isinstance(a, ComplexKForm) else pullback(A, a)
    out: dict = {"form": a.to_json()}
    if args.vectors:
        vs = np.asarray(inp.load(args.vectors), dtype=float).tolist()
        if isinstance(a, ComplexKForm):
            out["value"] = evaluate_complex(a, vs)
        else:
            out["value"] = float(evaluate(a, vs))
    return out, None, {}


# -- parser -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--restarts", type=int, default=8)
    common.add_argument("--budget", type=int, default=2000)
    common.add_argument("--out", type=str, default=None, help="write results here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="calibra", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"calibra {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn)
        return sp

    sp = add("williamson", cmd_williamson, "Williamson normal form of an SPD matrix")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--matrix")
    g.add_argument("--ellipsoid")

    sp = add("spectrum", cmd_spectrum, "symplectic spectrum of an ellipsoid")
    sp.add_argument("--ellipsoid", required=True)

    sp = add("width", cmd_width, "linear symplectic width (and k-width) of an ellipsoid")
    sp.add_argument("--ellipsoid", required=True)
    sp.add_argument("--k", type=int)

    sp = add("classify", cmd_classify, "symplectic / anti-symplectic / neither")
    sp.add_argument("--matrix", required=True)

    sp = add("power-classify", cmd_power_classify, "stabilizer verdict for omega^k")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--k", type=int, required=True)

    sp = add("comass", cmd_comass, "comass lower bound for a catalog or file form")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--form", choices=CATALOG)
    g.add_argument("--form-file")
    sp.add_argument("--n", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--max-iters", type=int, default=500)

    for name, fn, help in (
        ("squeeze", cmd_squeeze, "minimize the enclosing-cylinder radius over a group"),
        ("sweep", cmd_sweep, "random affine group elements against the non-squeezing floor"),
    ):
        sp = add(name, fn, help)
        sp.add_argument("--group", choices=sorted(GROUPS), required=True)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--k", type=int, help="power of omega for --group power")
        sp.add_argument(
            "--cylinder", default="symplectic", help="symplectic | zk | lagrangian | first:M | random:M"
        )
        sp.add_argument("--cylinder-k", type=int, help="k for the zk cylinder (defaults to --k)")
        sp.add_argument("--r", type=float, default=1.0)
        if name == "squeeze":
            sp.add_argument("--polish", action="store_true")
        else:
            sp.add_argument("--trials", type=int, default=1000)

    sp = add("witness", cmd_witness, "explicit squeezing map for a non-preserving map")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--kind", choices=("symplectic", "slag"), default="symplectic")
    sp.add_argument("--attempts", type=int, default=10_000)

    sp = add("slag-check", cmd_slag_check, "complex determinant and Omega-preservation")
    sp.add_argument("--matrix", required=True)

    sp = add("forms-eval", cmd_forms_eval, "evaluate, power or pull back a form")
    sp.add_argument("--form", required=True)
    sp.add_argument("--vectors")
    sp.add_argument("--power", type=int)
    sp.add_argument("--pullback")
    return p


_RUN_KEYS = ("command", "func", "out", "format")


def _emit_error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    inp = _Inputs()
    try:
        result, rows, extras = args.func(args, inp)
        if args.format == "csv":
            text = _csv_text(rows if rows is not None else _flat_rows(result))
        else:
            text = dumps(result)
        if args.out is None:
            sys.stdout.write(text)
            return 0
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        written = [str(out)]
        for suffix, body in extras.items():
            if args.format == "csv" and suffix.endswith(".csv"):
                continue
            path = out.with_name(out.stem + suffix)
            path.write_text(body)
            written.append(str(path))
        manifest = {
            "command": args.command,
            "version": __version__,
            "seed": args.seed,
            "parameters": {k: v for k, v in sorted(vars(args).items()) if k not in _RUN_KEYS},
            "input_digest": inp.digest.hexdigest(),
            "inputs": inp.paths,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": written,
        }
        manifest_path = out.with_name(out.stem + ".manifest.json")
        manifest_path.write_text(dumps(manifest))
        return 0
    except TripwireError as e:
        return _emit_error("tripwire", str(e), 3)
    except (PreconditionError, ValueError, KeyError, np.linalg.LinAlgError) as e:
        return _emit_error(type(e).__name__, str(e), 2)


if __name__ == "__main__":
    sys.exit(main())
