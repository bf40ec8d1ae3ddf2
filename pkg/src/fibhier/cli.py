"""Command-line driver.  Every subcommand prints one JSON document.

Exit codes: 0 success, 1 usage error, 2 verification failure (the JSON
still carries the witness).  Set SOURCE_DATE_EPOCH to pin the manifest
timestamp so reruns are byte-identical; FIBHIER_THREADS caps the worker
threads used by the annealer.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

from . import __version__
from .anneal import (
    DEFAULT_DEPTH,
    AnnealConfig,
    RefineSchedule,
    distance_one_starts,
    forward_anneal,
    make_instance,
    refine_from_starts,
    reverse_refine,
    success_statistics,
)
from .automata import count_words, rung_dfa
from .growth import perron_root, plastic_closed_form, plastic_sequence, rounding_identity_scan, staircase
from .hobo import build_hobo, dumps_sidecar, quadratize, reduction_threshold, verify_reduction, hobo_summary
from .spectra import HamiltonianSpec, full_spectrum, kernel_equals_language
from .words import Word, boundary_flip_mffs, fibonacci, fibonacci_word_prefix, is_minimal_forbidden, scan_mffs

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2

# budget used by the k5-reverse recipe and the acceptance suite
K5_BUDGET = {"reads": 5000, "sweeps": 10, "seed": 2024, "R": 8, "moves": "lifted"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        when = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return when.isoformat()


def manifest(command: str, params: dict) -> dict:
    return {
        "subcommand": command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "timestamp": _timestamp(),
    }


def render(command: str, params: dict, result: dict) -> str:
    doc = {"manifest": manifest(command, params), "result": result}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- commands


def cmd_mffs(K: int) -> tuple[dict, bool]:
    flip = boundary_flip_mffs(K)
    scan = scan_mffs(fibonacci(K))
    prefix = fibonacci_word_prefix(max(64, 8 * fibonacci(K)))
    minimal = [is_minimal_forbidden(m, prefix) for m in flip]
    agree = flip.members == scan.members
    result = {
        **flip.to_json(),
        "lengths": [len(m) for m in flip],
        "scan": scan.to_json()["mffs"],
        "agree": agree,
        "minimal": minimal,
    }
    return result, agree and all(minimal)


def cmd_automaton(K: int) -> dict:
    dfa = rung_dfa(K)
    return {"K": K, "num_states": dfa.num_states, **dfa.to_json()}


def cmd_growth(K_max: int, base: float, proportionality: float | None, tolerance: float) -> dict:
    return staircase(K_max, base=base, proportionality=proportionality, tolerance=tolerance).to_json()


def cmd_plastic(n_max: int, scan_n: int, precision: int) -> tuple[dict, bool]:
    cf = plastic_closed_form(precision)
    scan = rounding_identity_scan(scan_n, precision)
    residuals = {k: mpmath.nstr(v, 5) for k, v in cf.residuals().items()}
    return {
        "sequence": plastic_sequence(n_max),
        "closed_form": cf.to_json(),
        "residuals": residuals,
        "rounding_scan": scan.to_json(),
    }, scan.passed


def cmd_spectrum(K: int, N: int, couplings: str, max_states: int, cap: int) -> dict:
    spec = HamiltonianSpec.build(K, N, couplings)
    report = full_spectrum(spec, cap=cap)
    out = {"K": K, "couplings": [float(J) for J in spec.couplings], **report.to_json(max_states)}
    out["kernel"] = kernel_equals_language(spec, cap=cap).to_json()
    out["count_words"] = count_words(spec.dfa(), N)
    return out


def cmd_hobo(K: int, N: int, R: str, threshold: bool) -> tuple[dict, bool]:
    spec = HamiltonianSpec.unit(K, N)
    h = build_hobo(spec)
    q = quadratize(h, _fraction(R))
    verdict = verify_reduction(h, q)
    out = {"K": K, **hobo_summary(h, q), "hobo": h.to_json(), "verification": verdict.to_json()}
    if threshold:
        out["threshold"] = reduction_threshold(h).to_json()
    return out, verdict.exact


def cmd_qubo_export(K: int, N: int, R: str, out: Path) -> dict:
    h = build_hobo(HamiltonianSpec.unit(K, N))
    q = quadratize(h, _fraction(R))
    coo_path = out.with_suffix(".qubo")
    side_path = out.with_suffix(".json")
    coo_path.write_text(q.to_coo())
    side_path.write_text(dumps_sidecar(q) + "\n")
    return {"qubo": str(coo_path), "sidecar": str(side_path), **hobo_summary(h, q)}


def cmd_anneal(args) -> tuple[dict, str | None]:
    inst = make_instance(args.K, args.N, R=_fraction(args.R))
    cfg = AnnealConfig(
        reads=args.reads, sweeps=args.sweeps, beta_initial=args.beta_initial, beta_final=args.beta_final,
        seed=args.seed, gauge=args.gauge, moves=args.moves,
    )
    degeneracy = count_words(inst.dfa, args.N)
    if args.mode == "forward":
        reports = [forward_anneal(inst.qubo, cfg, inst.dfa)]
    else:
        schedule = RefineSchedule(args.depth)
        if args.start:
            reports = [reverse_refine(inst.qubo, Word(args.start), schedule, cfg, inst.dfa)]
        else:
            starts = distance_one_starts(inst.dfa, args.N, args.starts)
            reports = refine_from_starts(inst.qubo, starts, schedule, cfg, inst.dfa)
    summary = success_statistics(reports, degeneracy)
    out = {
        "mode": args.mode,
        "K": args.K,
        "N": args.N,
        "summary": summary.to_json(),
        "reports": [r.to_json(include_reads=args.per_read) for r in reports],
    }
    csv_text = None
    if args.csv:
        csv_text = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1] for i, r in enumerate(reports))
    return out, csv_text


def cmd_table(K_max: int, N_list: list[int]) -> dict:
    rows = []
    for K in range(3, K_max + 1):
        dfa = rung_dfa(K)
        mffs = boundary_flip_mffs(K)
        rows.append({
            "K": K,
            "max_len": mffs.max_length,
            "forbidden": [m.letters for m in mffs],
            "lambda": round(perron_root(dfa).value, 6),
            "D": {str(N): count_words(dfa, N) for N in N_list},
        })
    return {"rows": rows}


def render_table(result: dict) -> str:
    Ns = list(result["rows"][0]["D"]) if result["rows"] else []
    head = ["K", "max|M|", "lambda"] + [f"D(N={n})" for n in Ns] + ["forbidden"]
    lines = ["\t".join(head)]
    for r in result["rows"]:
        cells = [str(r["K"]), str(r["max_len"]), f"{r['lambda']:.6f}"]
        cells += [str(r["D"][n]) for n in Ns] + [", ".join(r["forbidden"])]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def k5_contrast(reads: int, sweeps: int, seed: int, R, moves: str, depth: float = DEFAULT_DEPTH) -> dict:
    """Forward annealing vs reverse refinement from distance-1 starts, K=5, N=10."""
    inst = make_instance(5, 10, R=R)
    cfg = AnnealConfig(reads=reads, sweeps=sweeps, seed=seed, moves=moves)
    degeneracy = count_words(inst.dfa, 10)
    forward = success_statistics([forward_anneal(inst.qubo, cfg, inst.dfa)], degeneracy)
    starts = distance_one_starts(inst.dfa, 10)
    reverse_reports = refine_from_starts(inst.qubo, starts, RefineSchedule(depth), cfg, inst.dfa)
    reverse = success_statistics(reverse_reports, degeneracy)
    return {
        "budget": {"reads": reads, "sweeps": sweeps, "seed": seed, "R": str(R), "moves": moves, "depth": depth},
        "starts": len(starts),
        "forward_success": forward.pooled_success,
        "reverse_success": reverse.pooled_success,
        "reverse_min_per_start": min(r.success_rate for r in reverse_reports),
        "forward": forward.to_json(),
        "reverse": reverse.to_json(),
        "passed": reverse.pooled_success >= 0.99 and forward.pooled_success < reverse.pooled_success,
    }


def repro(name: str) -> tuple[dict, bool]:
    if name == "plastic-rounding":
        scan = rounding_identity_scan(1000, 200)
        return scan.to_json(), scan.passed
    if name == "k4-spectrum":
        rep = full_spectrum(HamiltonianSpec.unit(4, 12))
        ok = rep.degeneracy == 49 and rep.gap == 1 and all(float(e).is_integer() and e >= 0 for e in rep.histogram)
        return {"degeneracy": rep.degeneracy, "gap": rep.gap, "histogram": rep.to_json(0)["histogram"]}, ok
    if name == "k5-reverse":
        res = k5_contrast(**K5_BUDGET)
        return res, res["passed"]
    raise UsageError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")


RECIPES = ("plastic-rounding", "k4-spectrum", "k5-reverse")


def _fraction(text) -> Fraction:
    return Fraction(str(text))


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fibhier", description="Fibonacci forbidden-factor Hamiltonian toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("mffs", help="minimal forbidden factors with cross-validation")
    s.add_argument("--K", type=int, required=True)

    s = sub.add_parser("automaton", help="avoidance DFA for rung K")
    s.add_argument("--K", type=int, required=True)

    s = sub.add_parser("growth", help="growth constants, entropies and energy scales")
    s.add_argument("--K-max", dest="K_max", type=int, default=6)
    s.add_argument("--base", type=float, default=1.0)
    s.add_argument("--proportionality", type=float, default=None)
    s.add_argument("--tolerance", type=float, default=1e-12)

    s = sub.add_parser("plastic", help="K=4 sequence, closed form and rounding scan")
    s.add_argument("--n-max", dest="n_max", type=int, default=30)
    s.add_argument("--scan-n", dest="scan_n", type=int, default=1000)
    s.add_argument("--precision", type=int, default=200)

    s = sub.add_parser("spectrum", help="exact classical spectrum by enumeration")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--couplings", choices=("unit", "entropy"), default="unit")
    s.add_argument("--max-states", dest="max_states", type=int, default=500)
    s.add_argument("--cap", type=int, default=20)

    s = sub.add_parser("hobo", help="HOBO polynomial, quadratization and exact verification")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--R", default="8")
    s.add_argument("--threshold", action="store_true", help="also bisect the smallest exact R")

    s = sub.add_parser("qubo-export", help="write the QUBO in coordinate format plus a JSON sidecar")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--R", default="8")
    s.add_argument("--out", type=Path, required=True, help="path prefix for .qubo and .json files")

    s = sub.add_parser("anneal", help="forward annealing or reverse refinement")
    s.add_argument("--mode", choices=("forward", "reverse"), default="forward")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--reads", type=int, default=1000)
    s.add_argument("--sweeps", type=int, default=200)
    s.add_argument("--R", default="8")
    s.add_argument("--depth", type=float, default=DEFAULT_DEPTH)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gauge", action="store_true")
    s.add_argument("--moves", choices=("single", "lifted", "mixed"), default="single")
    s.add_argument("--beta-initial", dest="beta_initial", type=float, default=0.1)
    s.add_argument("--beta-final", dest="beta_final", type=float, default=10.0)
    s.add_argument("--start", default=None, help="reverse mode: start word over L/S")
    s.add_argument("--starts", type=int, default=None, help="reverse mode: number of distance-1 starts")
    s.add_argument("--per-read", dest="per_read", action="store_true")
    s.add_argument("--csv", type=Path, default=None)

    s = sub.add_parser("table", help="lambda table with D_K(N) columns")
    s.add_argument("--K-max", dest="K_max", type=int, default=6)
    s.add_argument("--N", dest="N_list", type=_int_list, default=[0, 12])
    s.add_argument("--text", action="store_true", help="render the JSON as a tab-separated table")

    s = sub.add_parser("repro", help="run a named end-to-end recipe")
    s.add_argument("name", choices=RECIPES)
    return p


def _configure_threads() -> None:
    threads = os.environ.get("FIBHIER_THREADS")
    if threads:
        import numba

        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "command"}
    _configure_threads()
    ok = True
    try:
        cmd = args.command
        if cmd == "mffs":
            result, ok = cmd_mffs(args.K)
        elif cmd == "automaton":
            result = cmd_automaton(args.K)
        elif cmd == "growth":
            result = cmd_growth(args.K_max, args.base, args.proportionality, args.tolerance)
        elif cmd == "plastic":
            result, ok = cmd_plastic(args.n_max, args.scan_n, args.precision)
        elif cmd == "spectrum":
            result = cmd_spectrum(args.K, args.N, args.couplings, args.max_states, args.cap)
            ok = result["kernel"]["equal"]
        elif cmd == "hobo":
            result, ok = cmd_hobo(args.K, args.N, args.R, args.threshold)
        elif cmd == "qubo-export":
            result = cmd_qubo_export(args.K, args.N, args.R, args.out)
        elif cmd == "anneal":
            result, csv_text = cmd_anneal(args)
            if csv_text is not None:
                args.csv.write_text(csv_text)
        elif cmd == "table":
            result = cmd_table(args.K_max, args.N_list)
            if args.text:
                sys.stdout.write(render_table(result))
                return EXIT_OK
        elif cmd == "repro":
            result, ok = repro(args.name)
        else:  # pragma: no cover - argparse enforces choices
            raise UsageError(cmd)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"fibhier: error: {exc}\n")
        return EXIT_USAGE
    result = {**result, "passed": bool(ok)} if "passed" not in result else result
    sys.stdout.write(render(args.command, params, result))
    return EXIT_OK if ok else EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
