"""``kgrs verify|classify|spectrum`` command-line driver.

Exit codes: 0 success, 1 configuration error, 2 certification failure;
``classify`` additionally returns 3 for NotJOrthonormal and 4 for
Inconclusive.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import grs
from .errors import ConfigError, GridTooSmall, KGRSError, NotBiorthogonal, NotJOrthonormal
from .grid import Grid, GridFunction
from .hamiltonians import (
    build_truncated_NE1,
    eigen_residuals,
    example1_samples,
    perturbed_anharmonic_samples,
    shifted_oscillator_samples,
)
from .krein import PARITY, certify, gram_report
from .reports import curves_csv, matrix_csv, write_atomic, write_json
from .specfun import hermite_functions

log = logging.getLogger("kgrs")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERT = 2
EXIT_NOT_J = 3
EXIT_INCONCLUSIVE = 4

FAMILIES = {"shifted": grs.SHIFTED, "example1": grs.GAUSSIAN, "anharmonic": grs.ANHARMONIC}


@dataclass
class RunConfig:
    command: str
    family: str = "shifted"
    a: float = 0.5
    beta: float = 4.0
    p: str = "gauss-odd"
    n: int = 12
    grid_l: float = 14.0
    grid_m: int = 1024
    tol_cert: float = 1e-6
    tol_class: float = grs.ANTICOMMUTATOR_TOL
    tol_jeigen: float = grs.J_EIGEN_TOL
    out: str = "kgrs-out"
    lambdas: Optional[str] = None
    check_j: bool = False
    formats: tuple = ("json", "csv")

    def validate(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.n < 1:
            raise ConfigError(f"N must be at least 1, got {self.n}")
        if self.grid_m <= 0 or self.grid_m % 2:
            raise ConfigError(f"grid M must be a positive even integer, got {self.grid_m}")
        if not self.grid_l > 0:
            raise ConfigError(f"grid L must be positive, got {self.grid_l}")
        for name in ("tol_cert", "tol_class", "tol_jeigen"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.family == "shifted" and self.a == 0:
            raise ConfigError("shift a must be nonzero")
        if self.family == "anharmonic":
            if not self.beta > 2:
                raise ConfigError(f"beta must exceed 2, got {self.beta}")
            if self.p not in grs.P_PRESETS:
                raise ConfigError(f"unknown p preset {self.p!r}; known: {sorted(grs.P_PRESETS)}")
        unknown = set(self.formats) - {"json", "csv"}
        if unknown:
            raise ConfigError(f"unknown report formats {sorted(unknown)}")

    def resolved(self):
        d = asdict(self)
        del d["out"]
        d["formats"] = list(self.formats)
        if self.family != "shifted":
            d.pop("a")
        if self.family != "anharmonic":
            d.pop("beta")
            d.pop("p")
        return d

    def family_spec(self):
        grid = Grid(self.grid_l, self.grid_m)
        if self.family == "shifted":
            return grs.FamilySpec.shifted(self.a, self.n, grid)
        if self.family == "example1":
            return grs.FamilySpec.gaussian(self.n, grid)
        return grs.FamilySpec.anharmonic(self.beta, self.n, grid, p=grs.P_PRESETS[self.p], p_label=self.p)


_FIELD_TYPES = {
    "family": str, "a": float, "beta": float, "p": str, "n": int, "grid_l": float,
    "grid_m": int, "tol_cert": float, "tol_class": float, "tol_jeigen": float,
    "out": str, "lambdas": str,
}


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def load_config_file(path):
    """Flat ``key = value`` pairs under any section headers, merged."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            values[key.replace("-", "_")] = value
    return values


def build_config(command, args):
    values = load_config_file(args.config) if args.config else {}
    for key in list(_FIELD_TYPES) + ["check_j", "formats"]:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            values[key] = cli_value
    kwargs = {}
    try:
        for key, value in values.items():
            if key in _FIELD_TYPES:
                kwargs[key] = _FIELD_TYPES[key](value)
            elif key == "check_j":
                kwargs[key] = value if isinstance(value, bool) else _parse_bool(value)
            elif key == "formats":
                kwargs[key] = tuple(s.strip() for s in str(value).split(",") if s.strip())
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(command=command, **kwargs)
    cfg.validate()
    return cfg


def worker_count():
    raw = os.environ.get("KGRS_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _run_tasks(tasks):
    """Evaluate independent zero-argument callables, results by key."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return {k: fn() for k, fn in tasks.items()}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {k: pool.submit(fn) for k, fn in tasks.items()}
        return {k: f.result() for k, f in futures.items()}


def _test_functions(grid):
    """Gaussian probes lying in the domain of exp(x^2/4)."""
    x = grid.x
    e = hermite_functions(2, x)
    bump = (2 / math.pi) ** 0.25 * np.exp(-((x - 0.5) ** 2))
    return {
        "e0_e0": (GridFunction(grid, e[0]), GridFunction(grid, e[0])),
        "e0_e2": (GridFunction(grid, e[0]), GridFunction(grid, e[2])),
        "e0_bump": (GridFunction(grid, e[0]), GridFunction(grid, bump)),
        "bump_mirror": (GridFunction(grid, bump[::-1]), GridFunction(grid, bump)),
    }


def _emit(cfg, name, payload, csv_files=None):
    out = Path(cfg.out)
    if "json" in cfg.formats:
        write_json(out / f"{name}.json", payload)
    if "csv" in cfg.formats:
        for fname, text in (csv_files or {}).items():
            write_atomic(out / fname, text)


def cmd_verify(cfg):
    system = grs.build_family(cfg.family_spec())
    tasks = {kind: (lambda k=kind: gram_report(system, k)) for kind in ("ordinary", "indefinite", "biorthogonal")}
    probes = _test_functions(system.grid)
    for key, (f, g) in probes.items():
        tasks[f"qb_{key}"] = lambda f=f, g=g: grs.quasi_basis_residual(system, f, g, system.N)
    results = _run_tasks(tasks)
    defect = system.biorthogonality_defect()
    ok = defect <= cfg.tol_cert
    j_check = None
    if cfg.check_j:
        diag = np.diag(results["indefinite"].gram)
        j_check = {"abs_diag": [float(abs(v)) for v in diag], "passed": True, "detail": ""}
        try:
            certify(system, PARITY, cfg.tol_cert)
        except (NotJOrthonormal, NotBiorthogonal) as exc:
            j_check.update(passed=False, detail=str(exc))
            ok = False
    quasi = {}
    columns = {}
    for key in probes:
        curves = results[f"qb_{key}"]
        quasi[key] = {
            "exact": curves.exact,
            "phi_psi": curves.phi_psi,
            "psi_phi": curves.psi_phi,
            "max_order_gap": float(np.max(np.abs(np.array(curves.phi_psi) - np.array(curves.psi_phi)))),
        }
        columns[f"{key}_phi_psi"] = curves.phi_psi
        columns[f"{key}_psi_phi"] = curves.psi_phi
    payload = {
        "command": "verify",
        "config": cfg.resolved(),
        "family": system.family,
        "N": system.N,
        "grid": {"L": system.grid.L, "M": system.grid.M},
        "biorthogonality_defect": defect,
        "certified": ok,
        "j_check": j_check,
        "route_gap": system.provenance.get("route_gap"),
        "grams": {kind: results[kind].to_dict() for kind in ("ordinary", "indefinite", "biorthogonal")},
        "quasi_basis": quasi,
    }
    csv_files = {f"gram_{kind}.csv": matrix_csv(results[kind].gram) for kind in ("ordinary", "indefinite", "biorthogonal")}
    csv_files["quasi_basis.csv"] = curves_csv(columns)
    _emit(cfg, "verify", payload, csv_files)
    for kind in ("ordinary", "indefinite", "biorthogonal"):
        if "json" in cfg.formats:
            write_json(Path(cfg.out) / f"gram_{kind}.json", results[kind].to_dict())
    return EXIT_OK if ok else EXIT_CERT


def cmd_classify(cfg):
    system = grs.build_family(cfg.family_spec())
    report = grs.classify(
        system, PARITY, cert_tol=cfg.tol_cert, anticommutator_tol=cfg.tol_class, j_eigen_tol=cfg.tol_jeigen
    )
    payload = {"command": "classify", "config": cfg.resolved(), **report.to_dict()}
    csv_files = {}
    if report.j_eigen_residuals:
        csv_files["j_eigen_residuals.csv"] = curves_csv({"residual": report.j_eigen_residuals})
    _emit(cfg, "classify", payload, csv_files)
    return {grs.FIRST_TYPE: EXIT_OK, grs.NOT_J_ORTHONORMAL: EXIT_NOT_J}.get(report.verdict, EXIT_INCONCLUSIVE)


def read_lambdas(path):
    """One eigenvalue per line as ``re`` or ``re,im``; ``#`` starts a comment."""
    values = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [float(t) for t in line.split(",") if t.strip()]
                if len(parts) == 1:
                    values.append(complex(parts[0]))
                elif len(parts) == 2:
                    values.append(complex(parts[0], parts[1]))
                else:
                    raise ConfigError(f"{path}: expected 're' or 're,im', got {line!r}")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read eigenvalues from {path}: {exc}") from exc
    return np.array(values, dtype=complex)


def default_lambdas(cfg, system):
    n = np.arange(system.N)
    if cfg.family == "example1":
        return n + 0.5
    if cfg.family == "shifted":
        return 2 * n + 1 + cfg.a ** 2
    return np.asarray(system.provenance["energies"], dtype=float)


def _operator_residuals(cfg, system, lambdas):
    grid = system.grid
    if cfg.family == "shifted":
        applied = shifted_oscillator_samples(grid, cfg.a, system.phi)
    elif cfg.family == "example1":
        applied = example1_samples(grid, system.phi)
    else:
        applied = perturbed_anharmonic_samples(grid, cfg.beta, system.spec.p(grid.x), system.phi)
    return eigen_residuals(grid, applied, system.phi, lambdas)


def cmd_spectrum(cfg):
    system = grs.build_family(cfg.family_spec())
    explicit = cfg.lambdas is not None
    lambdas = read_lambdas(cfg.lambdas) if explicit else default_lambdas(cfg, system)
    if len(lambdas) != system.N:
        raise ConfigError(f"{len(lambdas)} eigenvalues given for N={system.N}")
    report = build_truncated_NE1(system, lambdas, label=f"H_phi_psi[{system.family}]")
    payload = {"command": "spectrum", "config": cfg.resolved(), "lambda_source": "explicit" if explicit else "family-default"}
    payload.update(report.to_dict())
    payload["input_lambdas"] = [[float(v.real), float(v.imag)] for v in lambdas]
    payload["biorthogonality_defect"] = system.biorthogonality_defect()
    if not explicit:
        payload["operator_residuals"] = _operator_residuals(cfg, system, lambdas)
    csv_files = {
        "spectrum.csv": curves_csv({
            "re": [v.real for v in report.eigenvalues],
            "im": [v.imag for v in report.eigenvalues],
            "residual": report.residuals,
        })
    }
    _emit(cfg, "spectrum", payload, csv_files)
    ok = payload["biorthogonality_defect"] <= cfg.tol_cert and report.eigenvalue_defect <= cfg.tol_cert
    return EXIT_OK if ok else EXIT_CERT


COMMANDS = {"verify": cmd_verify, "classify": cmd_classify, "spectrum": cmd_spectrum}


def build_parser():
    parser = argparse.ArgumentParser(prog="kgrs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("verify", "Gram matrices, biorthogonality and quasi-basis residual curves"),
        ("classify", "first-type classification with respect to parity"),
        ("spectrum", "spectrum of the truncated operator sum lambda_n |phi_n><psi_n|"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file (sections allowed)")
        p.add_argument("--family", choices=sorted(FAMILIES))
        p.add_argument("--a", type=float, help="shift of the shifted oscillator")
        p.add_argument("--beta", type=float, help="anharmonic exponent (> 2)")
        p.add_argument("--p", help="odd perturbation preset for the anharmonic family")
        p.add_argument("--n", type=int, help="truncation order N")
        p.add_argument("--grid-l", dest="grid_l", type=float)
        p.add_argument("--grid-m", dest="grid_m", type=int)
        p.add_argument("--tol-cert", dest="tol_cert", type=float)
        p.add_argument("--tol-class", dest="tol_class", type=float)
        p.add_argument("--tol-jeigen", dest="tol_jeigen", type=float)
        p.add_argument("--out", help="output directory")
        p.add_argument("--formats", help="comma list of json,csv")
        p.add_argument("--lambdas", help="CSV file of eigenvalues (spectrum only)")
        p.add_argument("--check-j", dest="check_j", action="store_const", const=True,
                       help="also require J-orthonormality (verify)")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except GridTooSmall as exc:
        print(f"kgrs: grid too small: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"kgrs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KGRSError as exc:
        print(f"kgrs: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
