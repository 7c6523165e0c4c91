"""``torus-field`` command line.

Every command resolves its parameters as built-in defaults, then a JSON
``--config`` file (a flat object, or a manifest from an earlier run), then
explicit flags.  The resolved record is written to a manifest next to the
output, so ``torus-field rerun <manifest>`` reproduces every file.

Exit codes: 0 success (a NoSolution report is a success), 2 usage error,
3 numerical budget failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .covariance import (
    canonical_cov_closed_1d,
    canonical_cov_heat,
    canonical_cov_series_1d,
    canonical_matern_cov_conv_full,
    periodized_matern_cov,
    spectral_cov,
)
from .errors import BudgetError, DivergenceError, TorusFieldError
from .kernels import (
    KernelProbe,
    SMOOTHINGS,
    bessel_potential_symbol,
    verify_holder_growth,
    verify_singularity_bound,
)
from .regularity import empirical_variogram, regularity_prediction, regularity_report
from .sampler import discrete_convergence_report, sample_field
from .spectral import (
    CM_CONVENTIONS,
    FAMILIES,
    CovarianceModel,
    canonical_measure,
    identity_symbol,
    lattice_ball,
    matern_symbol,
    measure_from_model,
    norm_symbol,
    solve_spde_measure,
    white_noise_measure,
)

FORMAT = "torus-field v1"
EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 2, 3
# relative floating-point allowance added to the summed bounds of two routes
ROUNDING_SLACK = 1e-13


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


# ---------------------------------------------------------------------------
# parameter tables
# ---------------------------------------------------------------------------

def _int_list(v):
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in str(v).split(",") if x.strip()]


def _lag_list(v):
    """``"0.1,0.25"`` or ``"0.1:0.2,0.3:0"`` (``:`` separates components)."""
    if isinstance(v, (list, tuple)):
        return [[float(c) for c in np.atleast_1d(x)] for x in v]
    out = []
    for item in str(v).split(","):
        if item.strip():
            out.append([float(c) for c in item.split(":")])
    return out


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _exp_range(v):
    """``"3:12"`` -> ``[3, ..., 12]``; lists pass through."""
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    s = str(v)
    if ":" in s:
        a, b = (int(x) for x in s.split(":"))
        step = 1 if b >= a else -1
        return list(range(a, b + step, step))
    return _int_list(s)


def _opt_float(v):
    return None if v is None else float(v)


@dataclass(frozen=True)
class Param:
    name: str
    conv: object
    default: object = None
    help: str = ""
    choices: tuple | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


MODEL_PARAMS = (
    Param("family", str, "matern", "covariance family", FAMILIES),
    Param("dim", int, 1, "dimension d"),
    Param("nu", _opt_float, None, "smoothness nu > 0"),
    Param("rho", _opt_float, None, "range rho > 0 (Stein form)"),
    Param("kappa", _opt_float, None, "operator range kappa > 0 (alternative to --rho)"),
    Param("sigma2", float, 1.0, "marginal scale"),
    Param("cm_exponent_convention", str, "paper-text", "canonical-matern exponent",
          CM_CONVENTIONS),
    Param("angular_frequency_factor", _bool, False, "use 4 pi^2 |k|^2 in symbols"),
    Param("torus_scaling", str, "unit",
          "how --rho is read: unit torus, or the 2 pi-periodic torus", ("unit", "angular")),
)

COMMANDS = {
    "sample": MODEL_PARAMS + (
        Param("grid_n", int, 256, "points per axis"),
        Param("seed", int, 0, "64-bit seed"),
        Param("out", str, "field.csv", "output CSV"),
    ),
    "cov": MODEL_PARAMS + (
        Param("method", str, "spectral", "evaluation route",
              ("spectral", "periodized", "convolution", "closed", "all")),
        Param("lags", _lag_list, None, "comma-separated lags; ':' separates components"),
        Param("lag_grid", int, None, "use lags j/M, j = 0..M-1, along the first axis"),
        Param("tol", float, 1e-8, "requested truncation tolerance"),
        Param("max_cutoff", int, None, "cutoff cap"),
        Param("resolution", int, 1024, "quadrature resolution for the convolution route"),
        Param("format", str, "csv", "output format", ("csv", "json")),
        Param("out", str, "cov.csv", "output file"),
    ),
    "analyze": MODEL_PARAMS + (
        Param("input", str, None, "field CSV to analyze instead of sampling"),
        Param("grid_n", int, 4096, "points per axis when sampling"),
        Param("seeds", _exp_range, "0:63", "seed list or a:b range"),
        Param("max_lag_fraction", float, 1.0 / 16.0, "largest lag as a fraction of the torus"),
        Param("fit_min", _opt_float, None, "smallest fitted lag (default 4/n)"),
        Param("fit_max", _opt_float, None, "largest fitted lag (default 1/16)"),
        Param("out", str, "report.json", "output JSON report"),
    ),
    "verify-kernel": (
        Param("order", float, None, "symbol order m"),
        Param("rho", float, 1.0, "symbol class rho in (0, 1]"),
        Param("dim", int, 1, "dimension d"),
        Param("alpha", _int_list, "0", "x-derivative multi-index"),
        Param("beta", _int_list, "0", "y-derivative multi-index"),
        Param("N", float, None, "exponent N (>= 0 singularity, < 0 Hoelder)"),
        Param("ladder", _exp_range, "3:12", "separations 2^-j for j in the range"),
        Param("cutoffs", _exp_range, "14:18", "cutoffs 2^j for j in the range"),
        Param("settle_tol", float, 1e-3, "relative settle tolerance"),
        Param("smoothing", str, None, "summation weights", SMOOTHINGS),
        Param("out", str, "kernel.json", "output JSON report"),
    ),
    "spde": (
        Param("symbol", str, "matern", "operator symbol", ("matern", "norm", "identity")),
        Param("forcing", str, "white-noise", "forcing measure", ("white-noise", "canonical")),
        Param("dim", int, 1, "dimension d"),
        Param("nu", float, 2.0, "Matern symbol exponent"),
        Param("kappa", float, 1.0, "Matern symbol kappa"),
        Param("angular_frequency_factor", _bool, False, "use 4 pi^2 |k|^2 in the symbol"),
        Param("radius", int, 64, "lattice ball radius"),
        Param("out", str, "spde.csv", "output CSV"),
    ),
    "discrete-canonical": (
        Param("dim", int, 1, "dimension d"),
        Param("k", _int_list, "1", "frequency index (comma-separated components)"),
        Param("n_list", _int_list, "64,128,256,512", "grid sizes"),
        Param("out", str, "discrete.csv", "output CSV"),
    ),
}


# ---------------------------------------------------------------------------
# resolution
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    try:
        raw = io.read_json(path)
    except (OSError, ValueError) as exc:
        raise UsageError("--config", f"cannot read {path}: {exc}")
    if not isinstance(raw, dict):
        raise UsageError("--config", "config must be a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    return raw


def resolve(command: str, ns: argparse.Namespace) -> dict:
    params = COMMANDS[command]
    known = {p.name: p for p in params}
    cfg = {p.name: p.default for p in params}
    if getattr(ns, "config", None):
        for key, val in _load_config(ns.config).items():
            key = key.replace("-", "_")
            if key in known:
                cfg[key] = val
            elif key != "command":
                raise UsageError("--config", f"unknown key {key!r} for {command}")
    for p in params:
        val = getattr(ns, p.name, None)
        if val is not None:
            cfg[p.name] = val
    out = {}
    for p in params:
        val = cfg[p.name]
        if val is not None:
            try:
                val = p.conv(val)
            except (TypeError, ValueError) as exc:
                raise UsageError(p.flag, f"invalid value {cfg[p.name]!r} ({exc})")
            if p.choices and val not in p.choices:
                raise UsageError(p.flag, f"must be one of {', '.join(p.choices)}")
        out[p.name] = val
    return out


def _positive(cfg, name, flag=None):
    v = cfg.get(name)
    if v is not None and not (v > 0 and math.isfinite(v)):
        raise UsageError(flag or "--" + name.replace("_", "-"), f"must be > 0, got {v}")


def _model(cfg) -> CovarianceModel:
    for name in ("nu", "rho", "kappa", "sigma2"):
        _positive(cfg, name)
    if cfg["dim"] < 1:
        raise UsageError("--dim", "must be >= 1")
    fam = cfg["family"]
    nu, rho, kappa = cfg["nu"], cfg["rho"], cfg["kappa"]
    if fam in ("matern", "canonical-matern"):
        if nu is None:
            raise UsageError("--nu", f"required for family {fam}")
        if (rho is None) == (kappa is None):
            raise UsageError("--rho", "give exactly one of --rho and --kappa")
        if kappa is not None:
            rho = math.sqrt(2.0 * nu) / kappa
        if cfg.get("torus_scaling") == "angular":
            rho = rho / (2.0 * math.pi)
    return CovarianceModel(family=fam, dim=cfg["dim"], nu=nu, rho=rho, sigma2=cfg["sigma2"],
                           cm_exponent_convention=cfg["cm_exponent_convention"],
                           angular_frequency_factor=cfg["angular_frequency_factor"])


def _manifest_path(out: str) -> Path:
    p = Path(out)
    if p.suffix == ".json":
        return p.with_name(p.stem + ".manifest.json")
    return p.with_suffix(".json")


def _manifest(command: str, cfg: dict, outputs, extra: dict | None = None) -> dict:
    m = {"format": FORMAT, "command": command, "config": cfg,
         "outputs": [str(o) for o in outputs]}
    if extra:
        m.update(extra)
    return m


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sample(cfg: dict) -> int:
    model = _model(cfg)
    if cfg["grid_n"] < 2:
        raise UsageError("--grid-n", "must be >= 2")
    if not 0 <= cfg["seed"] < 2**64:
        raise UsageError("--seed", "must be a 64-bit unsigned integer")
    field = sample_field(measure_from_model(model), cfg["grid_n"], cfg["seed"])
    out = cfg["out"]
    io.atomic_write_text(out, io.field_to_csv(field))
    io.write_json(_manifest_path(out), _manifest(
        "sample", cfg, [out], {"dim": field.dim, "n": field.n,
                               "provenance": field.provenance}))
    return EXIT_OK


def _cov_lags(cfg) -> np.ndarray:
    d = cfg["dim"]
    if cfg["lags"] is not None and cfg["lag_grid"] is not None:
        raise UsageError("--lags", "give either --lags or --lag-grid")
    if cfg["lag_grid"] is not None:
        M = cfg["lag_grid"]
        if M < 1:
            raise UsageError("--lag-grid", "must be >= 1")
        lags = np.zeros((M, d))
        lags[:, 0] = np.arange(M) / M
        return lags
    if not cfg["lags"]:
        raise UsageError("--lags", "lag list is empty")
    out = []
    for lag in cfg["lags"]:
        if len(lag) == 1 and d > 1:
            lag = lag + [0.0] * (d - 1)
        if len(lag) != d:
            raise UsageError("--lags", f"lag {lag} does not have {d} components")
        out.append(lag)
    return np.asarray(out, dtype=np.float64)


def _routes(model: CovarianceModel, method: str) -> list:
    fam = model.family
    available = {
        "matern": ["spectral", "periodized"],
        "canonical": ["spectral", "closed"] if model.dim == 1 else ["spectral"],
        "canonical-matern": ["spectral", "convolution"],
        "white-noise": [],
    }[fam]
    if method == "all":
        if len(available) < 1:
            raise UsageError("--family", f"no covariance route for {fam}")
        return available
    if method not in available:
        raise UsageError("--method", f"{method} is not available for family {fam}")
    return [method]


def _eval_route(route, model, lag, cfg):
    """Returns ``(value, certified_bound, cutoff)`` at one lag."""
    d = model.dim
    tol, cap = cfg["tol"], cfg["max_cutoff"]
    if route == "periodized":
        v, b = periodized_matern_cov(lag, model, tol=tol, **({"max_cutoff": cap} if cap else {}))
        return v, b.certified_bound, b.cutoff
    if route == "closed":
        return canonical_cov_closed_1d(float(lag[0])), 0.0, None
    if route == "convolution":
        angular_rho = model.rho * 2.0 * math.pi
        conv_model = CovarianceModel("canonical-matern", dim=d, nu=model.nu, rho=angular_rho,
                                     sigma2=model.sigma2)
        res = canonical_matern_cov_conv_full(lag, conv_model, tol=tol,
                                             resolution=cfg["resolution"],
                                             **({"max_cutoff": cap} if cap else {}))
        return res.value, res.budget.certified_bound + res.quadrature_error, res.budget.cutoff
    # spectral
    if model.family == "canonical":
        if d == 1:
            v, b = canonical_cov_series_1d(float(lag[0]))
            return float(v), b.certified_bound, b.cutoff
        return canonical_cov_heat(lag, d), None, None
    v, b = spectral_cov(measure_from_model(model), lag, tol=tol, max_cutoff=cap)
    return v, b.certified_bound, b.cutoff


def cmd_cov(cfg: dict) -> int:
    model = _model(cfg)
    _positive(cfg, "tol")
    lags = _cov_lags(cfg)
    routes = _routes(model, cfg["method"])
    d = model.dim
    rows, records, table = [], [], {}
    for route in routes:
        for i, lag in enumerate(lags):
            try:
                v, b, cut = _eval_route(route, model, lag, cfg)
            except BudgetError as exc:
                raise BudgetError(f"lag {lag.tolist()} ({route}): {exc}") from exc
            except DivergenceError as exc:
                raise UsageError("--method", f"{route} diverges for this model: {exc}")
            b = None if b is None else float(b)
            table[(route, i)] = (float(v), b)
            cut = None if cut is None else int(cut)
            rows.append([*lag.tolist(), float(v), "" if b is None else b, route,
                         "" if cut is None else cut])
            records.append({"lag": lag.tolist(), "value": float(v), "certified_bound": b,
                            "method": route, "cutoff": cut})
    comments = [f"{FORMAT} cov family={model.family} d={d}"]
    summary = {}
    if len(routes) > 1:
        worst, worst_bound, ok = 0.0, 0.0, True
        for i in range(len(lags)):
            vals = [table[(r, i)] for r in routes]
            for a in range(len(vals)):
                for c in range(a + 1, len(vals)):
                    gap = abs(vals[a][0] - vals[c][0])
                    bsum = (vals[a][1] or 0.0) + (vals[c][1] or 0.0)
                    bsum += ROUNDING_SLACK * max(1.0, abs(vals[a][0]), abs(vals[c][0]))
                    ok = ok and gap <= bsum
                    if gap >= worst:
                        worst, worst_bound = gap, bsum
        summary = {"max_disagreement": worst, "bound_at_max": worst_bound,
                   "within_bounds": ok, "rounding_slack": ROUNDING_SLACK}
        comments.append(f"max_disagreement={worst!r} bound_at_max={worst_bound!r} "
                        f"within_bounds={ok}")
    if cfg["format"] == "json":
        io.write_json(cfg["out"], {"format": FORMAT, "model": model.to_dict(),
                                   "tol": cfg["tol"], "rows": records, "summary": summary})
    else:
        cols = [f"lag_{j + 1}" for j in range(d)] + ["value", "certified_bound", "method",
                                                     "cutoff"]
        io.write_table(cfg["out"], cols, rows, comments)
    io.write_json(_manifest_path(cfg["out"]),
                  _manifest("cov", cfg, [cfg["out"]], {"summary": summary} if summary else None))
    return EXIT_OK


def cmd_analyze(cfg: dict) -> int:
    fr = None
    if cfg["fit_min"] is not None or cfg["fit_max"] is not None:
        n_ref = cfg["grid_n"]
        fr = (cfg["fit_min"] if cfg["fit_min"] is not None else 4.0 / n_ref,
              cfg["fit_max"] if cfg["fit_max"] is not None else 1.0 / 16.0)
    if cfg["input"]:
        try:
            field = io.read_field(cfg["input"])
        except (OSError, ValueError) as exc:
            raise UsageError("--input", str(exc))
        v = empirical_variogram(field, cfg["max_lag_fraction"], fr)
        report = {"alpha_hat": v.alpha_hat, "stderr": v.stderr, "degenerate": v.degenerate,
                  "clipped": v.clipped, "fit": v.to_dict(), "input": cfg["input"]}
        meas = field.provenance.get("measure", {})
        if isinstance(meas, dict) and meas.get("family") in FAMILIES:
            keys = ("family", "dim", "nu", "rho", "sigma2", "cm_exponent_convention",
                    "angular_frequency_factor")
            pred = regularity_prediction(CovarianceModel(**{k: meas[k] for k in keys}))
            report.update(pred.to_dict())
    else:
        model = _model(cfg)
        if cfg["grid_n"] < 8:
            raise UsageError("--grid-n", "must be >= 8")
        if len(cfg["seeds"]) < 16:
            raise UsageError("--seeds", "need at least 16 seeds")
        if not 0.0 < cfg["max_lag_fraction"] <= 0.5:
            raise UsageError("--max-lag-fraction", "must lie in (0, 1/2]")
        r = regularity_report(model, cfg["grid_n"], cfg["seeds"], cfg["max_lag_fraction"], fr)
        report = r.to_dict()
    io.write_json(cfg["out"], report)
    io.write_json(_manifest_path(cfg["out"]), _manifest("analyze", cfg, [cfg["out"]]))
    return EXIT_OK


def cmd_verify_kernel(cfg: dict) -> int:
    if cfg["order"] is None:
        raise UsageError("--order", "symbol order is required")
    if cfg["N"] is None:
        raise UsageError("--N", "exponent N is required")
    if not 0.0 < cfg["rho"] <= 1.0:
        raise UsageError("--rho", "must lie in (0, 1]")
    d = cfg["dim"]

    def multi(name):
        v = cfg[name]
        if len(v) == 1 and d > 1:
            v = v * d
        if len(v) != d or any(x < 0 for x in v):
            raise UsageError("--" + name, f"needs {d} nonnegative entries")
        return v

    alpha, beta = multi("alpha"), multi("beta")
    try:
        probe = KernelProbe(separations=tuple(2.0**-j for j in cfg["ladder"]),
                            cutoffs=tuple(2**j for j in cfg["cutoffs"]),
                            settle_tol=cfg["settle_tol"])
    except TorusFieldError as exc:
        raise UsageError("--ladder", str(exc))
    symbol = bessel_potential_symbol(cfg["order"], d, cfg["rho"])
    try:
        if cfg["N"] >= 0:
            rep = verify_singularity_bound(symbol, alpha, beta, cfg["N"], probe,
                                           smoothing=cfg["smoothing"])
        else:
            if any(beta):
                raise UsageError("--beta", "the Hoelder test takes x-derivatives only")
            rep = verify_holder_growth(symbol, alpha, cfg["N"], probe,
                                       smoothing=cfg["smoothing"])
    except TorusFieldError as exc:
        raise UsageError("--N", str(exc))
    io.write_json(cfg["out"], rep.to_dict())
    io.write_json(_manifest_path(cfg["out"]), _manifest("verify-kernel", cfg, [cfg["out"]]))
    return EXIT_OK


def cmd_spde(cfg: dict) -> int:
    d = cfg["dim"]
    if d < 1:
        raise UsageError("--dim", "must be >= 1")
    if cfg["radius"] < 1:
        raise UsageError("--radius", "must be >= 1")
    _positive(cfg, "nu")
    _positive(cfg, "kappa")
    if cfg["symbol"] == "matern":
        g = matern_symbol(cfg["nu"], cfg["kappa"], d, cfg["angular_frequency_factor"])
    elif cfg["symbol"] == "norm":
        g = norm_symbol(d)
    else:
        g = identity_symbol(d)
    mu_x = white_noise_measure(d) if cfg["forcing"] == "white-noise" else canonical_measure(d)
    sol = solve_spde_measure(g, mu_x, radius=cfg["radius"])
    cols = [f"k_{j + 1}" for j in range(d)] + ["symbol_abs", "mu_X", "mu_U"]
    rows = []
    if sol:
        ball = lattice_ball(cfg["radius"], d)
        gv = np.abs(np.asarray(g.value_fn(ball), dtype=np.complex128))
        mx = np.asarray(mu_x.weight_fn(ball), dtype=np.float64)
        mu = np.asarray(sol.measure.weight_fn(ball), dtype=np.float64)
        for k, a, b, c in zip(ball.tolist(), gv, mx, mu):
            rows.append([*k, float(a), float(b), float(c)])
        status = {"status": "solution", "unique": sol.unique,
                  "zero_set": [list(z) for z in sol.zero_set],
                  "growth_exponent": sol.measure.growth_exponent}
        comments = [f"{FORMAT} spde status=solution unique={sol.unique} "
                    f"zeros={len(sol.zero_set)}"]
    else:
        status = {"status": "no-solution", "k": None if sol.k is None else list(sol.k),
                  "reason": sol.reason}
        comments = [f"{FORMAT} spde status=no-solution k={sol.k} reason={sol.reason}"]
    io.write_table(cfg["out"], cols, rows, comments)
    io.write_json(_manifest_path(cfg["out"]),
                  _manifest("spde", cfg, [cfg["out"]], {"result": status}))
    return EXIT_OK


def cmd_discrete_canonical(cfg: dict) -> int:
    d = cfg["dim"]
    if len(cfg["k"]) != d:
        raise UsageError("--k", f"needs {d} components")
    if not cfg["n_list"]:
        raise UsageError("--n-list", "is empty")
    try:
        rep = discrete_convergence_report(d, cfg["k"], cfg["n_list"])
    except TorusFieldError as exc:
        flag = "--k" if "k = 0" in str(exc) else "--n-list"
        raise UsageError(flag, str(exc))
    cols = ["n", "mu_n", "limit", "ratio", "mu_n_unit", "ratio_unit"]
    rows = [[r.n, r.mu_n, r.limit, r.ratio, r.mu_n_unit, r.ratio_unit] for r in rep.rows]
    comments = [f"{FORMAT} discrete-canonical d={d} k={list(rep.k)}",
                f"fitted_order={rep.order!r} angular_limit_ratio={rep.angular_limit_ratio!r}"]
    io.write_table(cfg["out"], cols, rows, comments)
    io.write_json(_manifest_path(cfg["out"]),
                  _manifest("discrete-canonical", cfg, [cfg["out"]], {"report": rep.to_dict()}))
    return EXIT_OK


HANDLERS = {
    "sample": cmd_sample,
    "cov": cmd_cov,
    "analyze": cmd_analyze,
    "verify-kernel": cmd_verify_kernel,
    "spde": cmd_spde,
    "discrete-canonical": cmd_discrete_canonical,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torus-field",
                                     description="Gaussian random fields on the torus")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config or manifest; flags override it")
        for p in params:
            kw = {"dest": p.name, "default": None, "help": p.help}
            if p.choices:
                kw["choices"] = p.choices
            sp.add_argument(p.flag, **kw)
    rr = sub.add_parser("rerun", help="re-run a manifest")
    rr.add_argument("manifest")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "rerun":
            try:
                man = io.read_json(ns.manifest)
                command = man["command"]
            except (OSError, ValueError, KeyError, TypeError) as exc:
                raise UsageError("manifest", f"cannot read {ns.manifest}: {exc}")
            if command not in HANDLERS:
                raise UsageError("manifest", f"unknown command {command!r}")
            ns = argparse.Namespace(config=ns.manifest)
        else:
            command = ns.command
        cfg = resolve(command, ns)
        return HANDLERS[command](cfg)
    except UsageError as exc:
        print(f"torus-field: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as exc:
        print(f"torus-field: budget failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except TorusFieldError as exc:
        print(f"torus-field: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
