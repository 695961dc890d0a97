"""Command-line front end.

Subcommands: ``invariants`` (exact invariants plus oracle residuals),
``estimate`` (simulated protocol run, reconstructed invariants, criteria),
``werner-sweep`` (detection polynomials over a p-grid), ``selftest``.

Exit codes: 0 success, 1 usage error, 2 invalid state input, 3 numerical
failure.  CSV output is byte-identical for identical (command, config, seed)
and uses repr round-trip precision; schemas are documented in the README.
"""

from __future__ import annotations

import argparse
import itertools
import sys

import numpy as np

from . import criteria, reconstruct, stateio, twirl, weingarten
from .haar import DEFAULT_SEED
from .states import (
    BellDiagonalSpectrum,
    DensityMatrix,
    DimsProfile,
    StateError,
    bell_diagonal,
    maximally_mixed,
    random_density,
    werner_state,
)

EXIT_USAGE = 1
EXIT_BAD_STATE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(message)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit(lines: list[str], out_path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# state resolution
# ---------------------------------------------------------------------------

def _parse_params(text: str | None) -> dict[str, float]:
    if not text:
        return {}
    params = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"malformed --params item {item!r}, expected key=value")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = float(v)
        except ValueError as exc:
            raise UsageError(f"--params value {v!r} is not a number") from exc
    return params


def _parse_dims(text: str | None) -> DimsProfile | None:
    if not text:
        return None
    try:
        return DimsProfile(int(d) for d in text.split(","))
    except (ValueError, StateError) as exc:
        raise UsageError(f"bad --dims {text!r}: {exc}") from exc


def resolve_state(args) -> DensityMatrix:
    if args.state and args.builtin:
        raise UsageError("--state and --builtin are mutually exclusive")
    if args.state:
        return stateio.load_state(args.state)
    if not args.builtin:
        raise UsageError("one of --state or --builtin is required")
    params = _parse_params(args.params)
    dims = _parse_dims(args.dims)
    name = args.builtin
    if name == "werner":
        d = int(params.get("d", dims[0] if dims else 0))
        if d < 2:
            raise UsageError("werner needs d (via --params d=... or --dims)")
        if "p" not in params:
            raise UsageError("werner needs --params p=...")
        return werner_state(d, params["p"])
    if name == "bell-diagonal":
        try:
            lam = [params[f"l{i}"] for i in range(1, 5)]
        except KeyError as exc:
            raise UsageError("bell-diagonal needs --params l1=..,l2=..,l3=..,l4=..") from exc
        return bell_diagonal(BellDiagonalSpectrum(lam))
    if name == "maximally-mixed":
        if dims is None:
            raise UsageError("maximally-mixed needs --dims")
        return maximally_mixed(dims)
    if name == "random":
        if dims is None:
            raise UsageError("random needs --dims")
        rank = int(params.get("rank", dims.total))
        seed = int(params.get("seed", DEFAULT_SEED))
        return random_density(dims, rank, seed)
    raise UsageError(
        f"unknown builtin {name!r} (werner, bell-diagonal, maximally-mixed, random)"
    )


# ---------------------------------------------------------------------------
# oracles for the invariants command
# ---------------------------------------------------------------------------

def _purity_oracle(rho: DensityMatrix, subset: tuple[int, ...]) -> float:
    """Tr rho_P^2 by explicit index loops, independent of partial_trace."""
    dims = rho.dims.dims
    n = len(dims)
    t = rho.entries.reshape(dims + dims)
    total = 0.0 + 0.0j
    for i1 in itertools.product(*(range(d) for d in dims)):
        for i2 in itertools.product(*(range(d) for d in dims)):
            # first factor: row i1, column agreeing with i2 on P, i1 elsewhere
            j1 = tuple(i2[l] if l in subset else i1[l] for l in range(n))
            j2 = tuple(i1[l] if l in subset else i2[l] for l in range(n))
            total += t[i1 + j1] * t[i2 + j2]
    return float(total.real)


def _x3_oracle(rho: DensityMatrix) -> np.ndarray:
    """All eleven invariants via the diagram contraction, class-averaged."""
    vals = np.zeros(11)
    counts = np.zeros(11)
    for i, ta in enumerate(weingarten.S3):
        for j, tb in enumerate(weingarten.S3):
            k = weingarten.INVARIANT_ID[i][j]
            vals[k] += weingarten.diagram_contract(rho, ta, tb)
            counts[k] += 1
    return vals / counts


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_invariants(args) -> int:
    rho = resolve_state(args)
    lines = []
    if args.order == 2:
        x = reconstruct.exact_x2(rho)
        n = rho.dims.n_parties
        names, exact, oracle = [], [], []
        for mask in range(2**n):
            subset = tuple(l for l in range(n) if reconstruct._in_mask(mask, l, n))
            names.append("x%d" % mask)
            exact.append(float(x.purities[mask]))
            oracle.append(1.0 if not subset else _purity_oracle(rho, subset))
    else:
        if rho.dims.n_parties != 2:
            raise StateError("order 3 requires a bipartite state")
        x = reconstruct.exact_x3(rho)
        names = ["x%d" % k for k in range(11)]
        exact = list(x.values)
        oracle = list(_x3_oracle(rho))
    residuals = [abs(a - b) for a, b in zip(exact, oracle)]
    if args.format == "csv":
        lines.append("name,exact,oracle,residual")
        for row in zip(names, exact, oracle, residuals):
            lines.append(",".join(_fmt(v) for v in row))
    else:
        lines.append(f"exact order-{args.order} invariants, dims={list(rho.dims.dims)}")
        for nm, ex, orc, res in zip(names, exact, oracle, residuals):
            lines.append(f"  {nm:>4} = {_fmt(ex)}  (oracle {_fmt(orc)}, residual {res:.3e})")
    worst = max(residuals)
    if worst > 1e-8:
        raise reconstruct.ReconstructionError(
            f"oracle residual {worst:.3e} exceeds 1e-08"
        )
    _emit(lines, args.out)
    return 0


def _estimate_rows(rho: DensityMatrix, args):
    cfg = twirl.EstimatorConfig(
        n_unitaries=args.unitaries,
        shots=args.shots,
        master_seed=args.seed,
        plug_in=args.plug_in,
        workers=args.workers,
    )
    crits = []
    if args.order == 2:
        y, est = twirl.estimate_y2(rho, cfg)
        x_hat = reconstruct.invert_2(y).purities
        chunk_x = np.array(
            [
                reconstruct.invert_2(reconstruct.YVector2(rho.dims, m)).purities
                for m in est.chunk_means
            ]
        )
        names = ["x%d" % k for k in range(2**rho.dims.n_parties)]
        exact = reconstruct.exact_x2(rho).purities
        rep, violated = criteria.purity_criterion(
            reconstruct.XVector2(rho.dims, x_hat)
        )
        crits.append(rep)
    else:
        y, est = twirl.estimate_y3(rho, cfg)
        x_vec = reconstruct.invert_3(y)
        x_hat = np.array(x_vec.values)
        chunk_x = np.array(
            [
                reconstruct.invert_3_numeric(
                    reconstruct.YVector3(y.d_a, y.d_b, m)
                ).values
                for m in est.chunk_means
            ]
        )
        names = ["x%d" % k for k in range(11)]
        xt = reconstruct.exact_x3(rho)
        xs = 0.5 * (xt.values[9] + xt.values[10])
        exact = np.array(list(xt.values[:9]) + [xs, xs])
        crits.append(criteria.third_order_criterion(x_vec))
    # batch-means standard error of the reconstructed invariants
    if chunk_x.shape[0] > 1:
        c = chunk_x.shape[0]
        se_x = np.std(chunk_x, axis=0, ddof=1) / np.sqrt(c)
    else:
        se_x = np.full(len(names), np.nan)
    return names, x_hat, se_x, exact, crits


def cmd_estimate(args) -> int:
    rho = resolve_state(args)
    names, x_hat, se_x, exact, crits = _estimate_rows(rho, args)
    lines = []
    if args.format == "csv":
        lines.append("row_type,name,value,std_error,lhs,rhs,margin,detected")
        for nm, v, se, ex in zip(names, x_hat, se_x, exact):
            lines.append(f"x,{nm},{_fmt(v)},{_fmt(se)},,,,")
        for c in crits:
            lines.append(
                f"criterion,{c.name},,,{_fmt(c.lhs)},{_fmt(c.rhs)},"
                f"{_fmt(c.margin)},{_fmt(c.detected)}"
            )
    else:
        lines.append(
            f"estimated invariants, order={args.order}, unitaries={args.unitaries},"
            f" shots={args.shots}, seed={args.seed}"
        )
        for nm, v, se, ex in zip(names, x_hat, se_x, exact):
            lines.append(f"  {nm:>4} = {_fmt(v)} +/- {_fmt(se)}  (exact {_fmt(ex)})")
        for c in crits:
            verdict = "DETECTED" if c.detected else "not detected"
            lines.append(
                f"  criterion {c.name}: lhs={_fmt(c.lhs)} rhs={_fmt(c.rhs)}"
                f" margin={_fmt(c.margin)} -> {verdict}"
            )
    _emit(lines, args.out)
    return 0


def cmd_werner_sweep(args) -> int:
    d = args.d
    if d < 2:
        raise UsageError("--d must be >= 2")
    if args.steps < 2 or not 0.0 <= args.p_min < args.p_max <= 1.0:
        raise UsageError("invalid p-grid")
    grid = np.linspace(args.p_min, args.p_max, args.steps)
    has3 = d >= 3
    lines = ["p,poly2,poly3,detected2,detected3"]
    for p in grid:
        p2 = criteria.werner_poly_2(d, p)
        row = [_fmt(float(p)), _fmt(p2)]
        if has3:
            p3 = criteria.werner_poly_3(d, p)
            row += [_fmt(p3), _fmt(p2 < 0), _fmt(p3 < 0)]
        else:
            row += ["", _fmt(p2 < 0), ""]
        lines.append(",".join(row))
    t2 = criteria.werner_threshold_2(d)
    t3 = _fmt(criteria.werner_threshold_3(d)) if has3 else ""
    ppt = 1.0 / (d + 1.0)
    lines.append(f"summary,p_star_2={_fmt(t2)},p_star_3={t3},ppt={_fmt(ppt)},")
    _emit(lines, args.out)
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def run_selftest(perturb_w: float = 0.0) -> list[tuple[str, bool, str]]:
    """All internal consistency checks as (name, passed, detail) triples.

    ``perturb_w`` is a debug hook that offsets one Weingarten-matrix entry
    to confirm the Gram-identity check is sensitive.
    """
    checks = []

    def gram_ok(n: int, d: int) -> float:
        perms = weingarten.permutations_of_order(n)
        w = weingarten.w_matrix(n, d).copy()
        w[0, 0] += perturb_w
        g = np.array(
            [[weingarten.gram(t, m, d) for m in perms] for t in perms]
        )
        return float(np.max(np.abs(w @ g - np.eye(len(perms)))))

    worst = max(gram_ok(2, d) for d in range(2, 7))
    worst = max(worst, max(gram_ok(3, d) for d in range(3, 7)))
    checks.append(("gram-weingarten identity (n=2 d=2..6, n=3 d=3..6)",
                   worst < 1e-9, f"max residual {worst:.3e}"))

    rng = np.random.default_rng(2024)
    worst2 = 0.0
    for dims in [(2, 2), (3, 4), (2, 2, 3)]:
        rho = random_density(dims, rank=3, seed=rng)
        x = reconstruct.exact_x2(rho)
        xr = reconstruct.invert_2(reconstruct.forward_2(x))
        worst2 = max(worst2, float(np.max(np.abs(xr.purities - x.purities))))
    checks.append(("order-2 forward/invert round trip", worst2 < 1e-10,
                   f"max error {worst2:.3e}"))

    worst3 = 0.0
    worstn = 0.0
    for (da, db) in [(3, 3), (3, 4), (4, 4)]:
        rho = random_density((da, db), rank=4, seed=rng)
        x = reconstruct.exact_x3(rho)
        y = reconstruct.forward_3(x, da, db)
        xs = 0.5 * (x.values[9] + x.values[10])
        target = np.array(list(x.values[:9]) + [xs, xs])
        xc = np.array(reconstruct.invert_3(y).values)
        xn = np.array(reconstruct.invert_3_numeric(y).values)
        worst3 = max(worst3, float(np.max(np.abs(xc - target))))
        worstn = max(worstn, float(np.max(np.abs(xc - xn))))
    checks.append(("order-3 closed-form round trip", worst3 < 1e-10,
                   f"max error {worst3:.3e}"))
    checks.append(("order-3 closed form vs numeric solve", worstn < 1e-9,
                   f"max disagreement {worstn:.3e}"))

    rho = random_density((3, 3), rank=2, seed=rng)
    ox = _x3_oracle(rho)
    ex = np.array(reconstruct.exact_x3(rho).values)
    worst_o = float(np.max(np.abs(ox - ex)))
    checks.append(("diagram oracle vs closed-form traces", worst_o < 1e-10,
                   f"max residual {worst_o:.3e}"))

    # x9/x10 identification on the maximally entangled state:
    # matching 3-cycles give Tr rho^3 = 1, opposite 3-cycles give
    # Tr (rho^Gamma)^3 = 1/d^2 (= 1/4 at d=2)
    from .states import max_entangled_projector, make_state
    bell = make_state(max_entangled_projector(2), DimsProfile((2, 2)))
    c3, c3i = weingarten.S3[4], weingarten.S3[5]
    same = weingarten.diagram_contract(bell, c3, c3)
    opp = weingarten.diagram_contract(bell, c3, c3i)
    ident_ok = abs(same - 1.0) < 1e-12 and abs(opp - 0.25) < 1e-12
    checks.append((
        "x9 = Tr rho^3 (matching cycles), x10 = Tr (rho^Gamma)^3 (opposite cycles)",
        ident_ok,
        f"bell state: matching={same!r} (Tr rho^3 = 1), opposite={opp!r}"
        " (Tr (rho^Gamma)^3 = 1/4)",
    ))

    rho = random_density((3, 3), rank=5, seed=rng)
    y = reconstruct.forward_2(reconstruct.exact_x2(rho))
    dh = max(
        abs(
            reconstruct.purity_marginal(y, p)
            - reconstruct.purity_marginal_hamming(y, p)
        )
        for p in ([0], [1], [0, 1])
    )
    checks.append(("hamming vs product marginal purity", dh < 1e-10,
                   f"max disagreement {dh:.3e}"))

    thr_ok = True
    detail = []
    for d in (3, 4, 5, 10):
        t = criteria.werner_threshold_3(d)
        thr_ok &= abs(criteria.werner_poly_3(d, t)) < 1e-9
        detail.append(f"d={d}: {t:.6f}")
    checks.append(("order-3 Werner thresholds (Cardano vs polynomial)",
                   thr_ok, ", ".join(detail)))
    return checks


def cmd_selftest(args) -> int:
    checks = run_selftest(perturb_w=args.debug_perturb_w)
    lines = []
    ok = True
    for name, passed, detail in checks:
        ok &= passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    lines.append("selftest: " + ("all checks passed" if ok else "FAILURES above"))
    _emit(lines, args.out)
    return 0 if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_state_args(p):
    p.add_argument("--state", help="JSON state file")
    p.add_argument("--builtin",
                   help="werner | bell-diagonal | maximally-mixed | random")
    p.add_argument("--params", help="comma-separated key=value builtin parameters")
    p.add_argument("--dims", help="comma-separated local dimensions")


def _add_common_out(p):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "report"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twirlkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariants", help="exact invariants with oracle residuals")
    _add_state_args(p)
    p.add_argument("--order", type=int, choices=(2, 3), default=2)
    _add_common_out(p)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("estimate", help="simulate a protocol run and reconstruct")
    _add_state_args(p)
    p.add_argument("--order", type=int, choices=(2, 3), default=2)
    p.add_argument("--unitaries", type=int, default=1000)
    p.add_argument("--shots", type=int, default=0,
                   help="shots per unitary (0 = exact Born probabilities)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plug-in", action="store_true",
                   help="use the biased plug-in shot estimator")
    _add_common_out(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("werner-sweep", help="detection polynomials over a p-grid")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p-min", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_werner_sweep)

    p = sub.add_parser("selftest", help="internal consistency checks")
    p.add_argument("--debug-perturb-w", type=float, default=0.0,
                   help=argparse.SUPPRESS)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateError as exc:
        print(f"invalid state input: {exc}", file=sys.stderr)
        return EXIT_BAD_STATE
    except (reconstruct.ReconstructionError, twirl.EstimationError,
            weingarten.SingularDimensionError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
