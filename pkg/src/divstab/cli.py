"""Command line: divstab <command> --model M [--job J] ...

Exit status: 0 ok, 1 domain error, 2 schema error, 3 internal consistency failure.
"""
import argparse
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import curve as cv
from . import functionals as fn
from . import io as dio
from . import scanner
from .errors import ConsistencyError, DomainError, SchemaError
from .scalars import first_nonneg_root, fmt, q

COMMANDS = ("norm", "beta", "delta", "sigma-val", "sigma-div", "energy", "ding", "mabuchi", "scan", "selftest")


def _exact(x):
    return {"exact": fmt(x), "float": float(x)}


def _pair(model, job):
    if "support" in job:
        if model.kind != "toric":
            raise SchemaError('"support" is only meaningful for toric models')
        w = model.from_divisor([q(x) for x in job["support"]])
    elif "omega" in job:
        w = model.cls([q(x) for x in job["omega"]])
    else:
        w = model.default_omega()
        if w is None:
            raise SchemaError("no omega in the job and no default omega in the model")
    return fn.PolarizedPair(model, w)


def _valuation(model, d):
    if not isinstance(d, dict):
        raise SchemaError("valuation must be an object")
    try:
        return model.parse_valuation(d)
    except KeyError as e:
        raise SchemaError(f"valuation is missing field {e}") from None


def _measure(model, items):
    if not isinstance(items, list) or not items:
        raise SchemaError("measure must be a nonempty list of {valuation, mass}")
    atoms = []
    for it in items:
        v = it.get("valuation")
        atoms.append((None if v is None else _valuation(model, v), q(it["mass"])))
    return fn.DivisorialMeasure(tuple(atoms))


def _potential(d):
    try:
        rays = {p: cv.RayData([q(k) for k in r["knots"]], [q(s) for s in r["slopes"]])
                for p, r in d.get("rays", {}).items()}
        return cv.PLPotential.build(q(d["c"]), rays)
    except (KeyError, TypeError, AttributeError) as e:
        raise SchemaError(f"malformed potential: {e}") from None


def _need(job, key, cmd):
    if key not in job:
        raise SchemaError(f"{cmd} needs a job file with a {key!r} entry")
    return job[key]


def _candidates(model, args, job):
    radius = args.radius if args.radius is not None else job.get("radius")
    depth = args.depth if args.depth is not None else job.get("depth")
    return fn.candidates_for(model, radius, depth)


def _curve_only(pair, what):
    if pair.model.kind != "curve":
        raise DomainError(f"{what} of potentials is implemented on the curve backend only")
    return pair.curve_model()


def run(cmd, model, pair, job, args):
    if cmd == "norm":
        if "measure" in job:
            mu = _measure(model, job["measure"])
            return {"measure": mu.encode(), "energy": fn.measure_energy(pair, mu).to_json(),
                    "entropy": _exact(fn.entropy(pair, mu))}
        v = _valuation(model, _need(job, "valuation", cmd))
        f = fn.vol_curve(pair, v)
        T = first_nonneg_root(f)
        return {"valuation": v.encode(), "energy": _exact(fn.dirac_energy(pair, v)),
                "log_discrepancy": _exact(fn.log_discrepancy(pair, v)),
                "T": None if T == "none" else _exact(v.t * T),
                "volume_curve": f.to_json(), "bound_kind": "exact"}
    if cmd == "beta":
        if "measure" in job:
            mu = _measure(model, job["measure"])
            return {"measure": mu.encode(), "beta": fn.beta_measure(pair, mu).to_json(),
                    "entropy": _exact(fn.entropy(pair, mu))}
        v = _valuation(model, _need(job, "valuation", cmd))
        b1, b2 = fn.beta_dirac(pair, v, both=True)
        out = {"valuation": v.encode(), "value": fmt(b1), "float": float(b1), "bound_kind": "exact",
               "routes": {"derivative": fmt(b1)}}
        if b2 is not None:
            out["routes"]["proportional"] = fmt(b2)
        return out
    if cmd in ("delta", "sigma-val", "sigma-div"):
        cands, desc = _candidates(model, args, job)
        f = {"delta": fn.delta, "sigma-val": fn.sigma_val, "sigma-div": fn.sigma_div}[cmd]
        return f(pair, cands, desc, args.jobs).to_json()
    if cmd == "energy":
        cm = _curve_only(pair, "energy")
        phi = _potential(_need(job, "potential", cmd))
        cv.check_potential(cm, phi)
        mu = cv.monge_ampere(cm, phi)
        return {"potential": phi.to_json(), "E": _exact(cv.energy(cm, phi)),
                "J": _exact(cv.j_functional(cm, phi)), "monge_ampere": mu.to_json(),
                "measure_energy": _exact(cv.measure_energy(cm, mu)[0]),
                "grad_K": _exact(cv.grad_energy(cm, phi, cm.deg_KB))}
    if cmd == "ding":
        cm = _curve_only(pair, "ding")
        phi = _potential(_need(job, "potential", cmd))
        cv.check_potential(cm, phi)
        return {"ding": _exact(cv.ding(cm, phi)), "L": _exact(cv.l_functional(cm, phi)),
                "E": _exact(cv.energy(cm, phi))}
    if cmd == "mabuchi":
        cm = _curve_only(pair, "mabuchi")
        phi = _potential(_need(job, "potential", cmd))
        cv.check_potential(cm, phi)
        return {"mabuchi": _exact(cv.mabuchi(cm, phi)), "entropy": _exact(cv.entropy(cm, cv.monge_ampere(cm, phi)))}
    if cmd == "selftest":
        return scanner.validation_suite(pair, seed=args.seed).to_json()
    raise SchemaError(f"unknown command {cmd}")


def _slice(model, d):
    try:
        return scanner.SliceSpec(model.cls([q(x) for x in d["base"]]),
                                 tuple(model.cls([q(x) for x in v]) for v in d["directions"]),
                                 tuple((q(a), q(b)) for a, b in d["ranges"]),
                                 tuple(int(n) for n in d["points"]))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed slice: {e}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="divstab", description="Divisorial stability invariants of polarized pairs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", help="model file or bundled model name")
    p.add_argument("--job", help="job file (may name the model itself)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--output-dir", help="directory for output files; overrides the directory part of --out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--radius", type=int, help="toric candidate radius R")
    p.add_argument("--depth", type=int, help="surface blowup-chain depth bound")
    p.add_argument("--seed", type=int, default=0, help="seed for the validation suite")
    p.add_argument("--plot-data", help="scan: also write (x, y, value) triples here")
    p.add_argument("--timestamp", action="store_true", help="scan: record the wall-clock time in the metadata")
    return p


def _write(text, args, default_name):
    if not args.out and not args.output_dir:
        sys.stdout.write(text)
        return
    path = Path(args.out) if args.out else Path(default_name)
    if args.output_dir:
        path = Path(args.output_dir) / path.name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        job = dio.load_job(args.job) if args.job else {}
        src = args.model or job.get("model")
        if not src:
            raise SchemaError("no model given (--model or a job with a 'model' entry)")
        model = dio.load_model(src)
        mhash = dio.model_hash(model)
        if args.command == "scan":
            sl = _slice(model, _need(job, "slice", "scan"))
            cands, desc = _candidates(model, args, job)
            ts = datetime.now(timezone.utc).isoformat() if args.timestamp else None
            table = scanner.scan(model, sl, job.get("functionals", scanner.FUNCTIONALS), cands, desc, args.jobs,
                                 model_hash=mhash, timestamp=ts)
            if args.plot_data:
                f = "sigma_val" if "sigma_val" in table.meta["functionals"] else table.meta["functionals"][0]
                Path(args.plot_data).write_text(table.plot_data(f))
            if args.format == "csv":
                _write(table.to_csv(), args, "scan.csv")
            else:
                _write(dio.dumps(table.to_json()), args, "scan.json")
            return 0
        if args.format == "csv":
            raise SchemaError("csv output is only available for scan tables")
        pair = _pair(model, job)
        result = run(args.command, model, pair, job, args)
        out = {"command": args.command, "model": model.name, "model_hash": mhash, "omega": pair.omega.to_json(),
               "result": result}
        if model.cone_assumption:
            out["assumption"] = model.cone_assumption
        _write(dio.dumps(out), args, f"{args.command}.json")
        if args.command == "selftest" and not result["passed"]:
            failed = [e["check"] for e in result["entries"] if not e["passed"]]
            print("error: validation failures: " + "; ".join(failed), file=sys.stderr)
            return 3
        return 0
    except ConsistencyError as e:
        print(f"error: internal consistency failure: {e}", file=sys.stderr)
        return 3
    except SchemaError as e:
        print(f"error: schema: {e}", file=sys.stderr)
        return 2
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
