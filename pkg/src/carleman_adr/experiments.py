"""Experiment runners behind the command-line interface.

Each runner takes a plain ``key = value`` config file and an output
directory, writes CSV files whose header comment block echoes every
resolved parameter, and raises ConfigError / ToleranceError for the two
failure exit codes.  Identical configs (including the seed) produce
byte-identical CSV files: floats are printed at 17 significant digits and
nothing time- or host-dependent is written.

The thread count for the p0 grid scan can be overridden with the
CARLEMAN_ADR_THREADS environment variable (default 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adr_core import (
    AdrParams,
    InitialBox,
    build_linear_matrix,
    derived_numbers,
    gaussian_velocity,
    logistic_carleman_truncated,
    logistic_exact,
)
from .block_encoding import (
    CirculantStep,
    QuadraticCoupling,
    build_be_circuit_B,
    build_be_circuit_L,
    check_applicability,
    localized_amplitudes,
    p0_analytic_circulant,
    simulate_be,
    uniform_amplitudes,
)
from .carleman import assemble_carleman_sparse, convergence_study, operator_for_params
from .pauli import decompose

THREAD_ENV_VAR = "CARLEMAN_ADR_THREADS"
COMPONENT_TOL = 1e-11
PROBABILITY_TOL = 1e-12


class ConfigError(Exception):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


class ToleranceError(Exception):
    """A verification tolerance was breached (CLI exit code 1)."""


# --- config files ---------------------------------------------------------------


class Config:
    """Flat key = value config with typed access and unknown-key detection."""

    def __init__(self, values: dict[str, str], source: str = "<memory>"):
        self.values = dict(values)
        self.source = source
        self._seen: set[str] = set()

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        values: dict[str, str] = {}
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip()
        return cls(values, source=str(path))

    def _raw(self, key: str, default):
        self._seen.add(key)
        if key in self.values:
            return self.values[key]
        if default is _REQUIRED:
            raise ConfigError(f"{self.source}: missing required key {key!r}")
        return default

    def get_str(self, key, default=None) -> str:
        value = self._raw(key, default)
        return value if isinstance(value, str) else value

    def get_int(self, key, default=None) -> int:
        value = self._raw(key, default)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.source}: key {key!r} must be an integer") from None

    def get_float(self, key, default=None) -> float:
        value = self._raw(key, default)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{self.source}: key {key!r} must be a number") from None

    def get_bool(self, key, default=False) -> bool:
        value = self._raw(key, default)
        if isinstance(value, bool):
            return value
        if value.lower() in ("true", "yes", "1"):
            return True
        if value.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{self.source}: key {key!r} must be true/false")

    def get_floats(self, key, default=None) -> list[float]:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return list(value)
        return parse_grid(value, self.source, key)

    def get_ints(self, key, default=None) -> list[int]:
        value = self._raw(key, default)
        if not isinstance(value, str):
            return list(value)
        try:
            return [int(part) for part in value.split(",") if part.strip()]
        except ValueError:
            raise ConfigError(f"{self.source}: key {key!r} must be comma-separated integers") from None

    def reject_unknown(self):
        unknown = sorted(set(self.values) - self._seen)
        if unknown:
            raise ConfigError(f"{self.source}: unknown keys: {', '.join(unknown)}")


class _Required:
    pass


_REQUIRED = _Required()


def parse_grid(text: str, source: str = "<memory>", key: str = "?") -> list[float]:
    """Grid values from 'linspace:lo:hi:n' or a comma-separated list."""
    text = text.strip()
    if text.startswith("linspace:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"{source}: key {key!r}: linspace needs lo:hi:count")
        try:
            lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"{source}: key {key!r}: bad linspace values") from None
        if count < 1:
            raise ConfigError(f"{source}: key {key!r}: linspace count must be >= 1")
        return [float(x) for x in np.linspace(lo, hi, count)]
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{source}: key {key!r} must be numbers or linspace:lo:hi:n") from None


# --- CSV output -------------------------------------------------------------------


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: Path, metadata: dict, columns: list[str], rows) -> None:
    """CSV with a '#'-prefixed metadata block; deterministic byte-for-byte."""
    lines = [f"# {key} = {format_cell(value)}" for key, value in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(cell) for cell in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def thread_count() -> int:
    raw = os.environ.get(THREAD_ENV_VAR, "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"{THREAD_ENV_VAR} must be an integer, got {raw!r}") from None
    return max(1, count)


# --- shared model construction ----------------------------------------------------


def _adr_params(config: Config, metadata: dict) -> AdrParams:
    n = config.get_int("adr.n_sites", 20)
    kind = config.get_str("adr.velocity_kind", "constant")
    if kind == "constant":
        velocity = config.get_float("adr.velocity", 1.0)
        metadata["adr.velocity"] = velocity
    elif kind == "gaussian":
        u0 = config.get_float("adr.velocity_u0", 1.0)
        sigma = config.get_float("adr.velocity_sigma", n / 8.0)
        velocity = gaussian_velocity(n, u0=u0, sigma=sigma)
        metadata["adr.velocity_u0"] = u0
        metadata["adr.velocity_sigma"] = sigma
        metadata["adr.velocity_values"] = " ".join(format_cell(v) for v in velocity)
    elif kind == "explicit":
        values = config.get_floats("adr.velocity_values", _REQUIRED)
        if len(values) != n:
            raise ConfigError("adr.velocity_values must list one value per site")
        velocity = np.array(values)
        metadata["adr.velocity_values"] = " ".join(format_cell(v) for v in velocity)
    else:
        raise ConfigError(f"unknown adr.velocity_kind {kind!r}")
    params = AdrParams(
        n_sites=n,
        diffusion=config.get_float("adr.diffusion", 1.0),
        velocity=velocity,
        reaction_a=config.get_float("adr.reaction_a", 1.0),
        reaction_b=config.get_float("adr.reaction_b", 0.6),
        dx=config.get_float("adr.dx", 1.0),
        dt=config.get_float("adr.dt", 0.01),
    )
    metadata.update({
        "adr.n_sites": params.n_sites,
        "adr.diffusion": params.diffusion,
        "adr.velocity_kind": kind,
        "adr.reaction_a": params.reaction_a,
        "adr.reaction_b": params.reaction_b,
        "adr.dx": params.dx,
        "adr.dt": params.dt,
    })
    return params


def _initial_field(config: Config, params: AdrParams, metadata: dict) -> np.ndarray:
    kind = config.get_str("init.kind", "box")
    if kind == "box":
        box = InitialBox(height=config.get_float("init.height", 1.0),
                         width=config.get_int("init.width", 5))
        metadata.update({"init.kind": "box", "init.height": box.height, "init.width": box.width})
        return box.field(params.n_sites)
    if kind == "explicit":
        values = config.get_floats("init.values", _REQUIRED)
        if len(values) != params.n_sites:
            raise ConfigError("init.values must list one value per site")
        metadata["init.kind"] = "explicit"
        metadata["init.values"] = " ".join(format_cell(v) for v in values)
        return np.array(values)
    raise ConfigError(f"unknown init.kind {kind!r}")


def _base_metadata(config: Config, experiment: str) -> dict:
    declared = config.get_str("experiment", experiment)
    if declared != experiment:
        raise ConfigError(f"config declares experiment {declared!r}, expected {experiment!r}")
    return {"experiment": experiment, "package_version": __version__}


# --- convergence -------------------------------------------------------------------


def run_convergence(config: Config, out_dir: str | Path) -> None:
    """Carleman-vs-Euler error study; writes convergence.csv + per-K trajectories."""
    out = Path(out_dir)
    metadata = _base_metadata(config, "convergence")
    params = _adr_params(config, metadata)
    phi0 = _initial_field(config, params, metadata)
    n_steps = config.get_int("run.n_steps", 1000)
    truncations = config.get_ints("run.truncations", "1,2,3,4,5")
    budget = config.get_float("run.max_rel_err_budget", np.nan)
    metadata.update({"run.n_steps": n_steps,
                     "run.truncations": " ".join(str(k) for k in truncations)})
    nums = derived_numbers(params) if params.uniform_velocity else None
    if nums is not None:
        metadata.update({"gamma_diffusion": nums.gamma_diffusion,
                         "gamma_advection": nums.gamma_advection,
                         "gamma_reaction": nums.gamma_reaction,
                         "peclet_cell": nums.peclet_cell})
    config.reject_unknown()

    study = convergence_study(phi0, params, n_steps, truncations)
    meta = dict(metadata)
    meta["log_slope_fit"] = study.slope
    for row in study.rows:
        if row.diverged_at is not None:
            meta[f"diverged_K{row.truncation}"] = f"step {row.diverged_at}"
    write_csv(
        out / "convergence.csv",
        meta,
        ["K", "max_rel_err", "mean_rel_err", "t_star"],
        [(r.truncation, r.max_rel_err, r.mean_rel_err, r.t_star_index * params.dt)
         for r in study.rows],
    )

    times = np.arange(n_steps + 1) * params.dt
    phi_max = float(phi0.max())
    ratio = params.reaction_b * phi_max / params.reaction_a
    logistic_ok = 0.0 <= ratio < 1.0
    exact = logistic_exact(phi_max, params.reaction_a, params.reaction_b, times) if logistic_ok else None
    for row in study.rows:
        k = row.truncation
        traj = study.carleman[k]
        diff = np.abs(study.reference - traj)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(np.abs(study.reference) >= 1e-12,
                           diff / np.abs(study.reference), np.nan)
        rel_max = np.nanmax(np.where(np.isnan(rel), -np.inf, rel), axis=1)
        cols = ["t", "rel_err", "abs_err", "logistic_rel_err", "logistic_rel_err_series_k"]
        if logistic_ok:
            # single-site analogue: a K-block hierarchy reproduces the partial
            # sum of order K-1; the order-K sum is kept alongside for reference
            matched = np.abs(exact - logistic_carleman_truncated(
                phi_max, params.reaction_a, params.reaction_b, times, max(k - 1, 0))) / np.abs(exact)
            series_k = np.abs(exact - logistic_carleman_truncated(
                phi_max, params.reaction_a, params.reaction_b, times, k)) / np.abs(exact)
        else:
            matched = series_k = [None] * times.size
        meta_k = dict(metadata)
        meta_k["K"] = k
        meta_k["logistic_reference"] = ("partial sums of orders K-1 and K"
                                        if logistic_ok else "unavailable (R >= 1)")
        write_csv(
            out / f"trajectory_K{k}.csv",
            meta_k,
            cols,
            [(times[i], rel_max[i], diff[i].max(), matched[i], series_k[i])
             for i in range(times.size)],
        )

    if np.isfinite(budget):
        worst = max(r.max_rel_err for r in study.rows)
        if not np.isfinite(worst) or worst > budget:
            raise ToleranceError(f"max relative error {worst} exceeds budget {budget}")


# --- pauli scaling -----------------------------------------------------------------


def _expansion_rows(tag: str, n_sites: int, truncation, matrix, epsilons):
    nnz = matrix.nnz if hasattr(matrix, "nnz") else int(np.count_nonzero(matrix))
    try:
        expansion = decompose(matrix)
    except ValueError as exc:
        raise ConfigError(f"{tag} family at N={n_sites}: {exc}") from None
    coeffs = np.abs(expansion.coefficients()) ** 2
    suffix = np.concatenate([np.cumsum(coeffs[::-1])[::-1], [0.0]])
    scale = 2**expansion.n_qubits / expansion.source_norm**2
    distance_rows = [
        (tag, n_sites, truncation, expansion.n_qubits, m, nnz,
         m / nnz, float(np.sqrt(suffix[m] * scale)))
        for m in range(len(expansion.terms) + 1)
    ]
    mstar_rows = [
        (tag, n_sites, truncation, expansion.n_qubits, eps,
         expansion.terms_for_epsilon(eps), len(expansion.terms), nnz)
        for eps in epsilons
    ]
    return distance_rows, mstar_rows


def run_pauli(config: Config, out_dir: str | Path) -> None:
    """Pauli truncation-distance curves and m*(epsilon) tables."""
    out = Path(out_dir)
    metadata = _base_metadata(config, "pauli")
    params = _adr_params(config, metadata)
    family = config.get_str("family", "both")
    if family not in ("carleman", "linear", "both"):
        raise ConfigError(f"unknown family {family!r}")
    epsilons = config.get_floats("epsilons", "0.1,0.01,0.001")
    carleman_sites = config.get_ints("carleman.n_list", "2,3,4,5,6")
    truncation = config.get_int("carleman.truncation", 3)
    linear_qubits = config.get_ints("linear.q_list", "2,3,4,5,6")
    metadata.update({
        "family": family,
        "epsilons": " ".join(format_cell(e) for e in epsilons),
        "carleman.n_list": " ".join(str(n) for n in carleman_sites),
        "carleman.truncation": truncation,
        "linear.q_list": " ".join(str(q) for q in linear_qubits),
    })
    config.reject_unknown()
    if not params.uniform_velocity:
        raise ConfigError("the pauli scaling families resize the lattice and "
                          "therefore require a constant velocity")

    def sized(n: int) -> AdrParams:
        return AdrParams(n_sites=n, diffusion=params.diffusion, velocity=float(params.velocity),
                         reaction_a=params.reaction_a, reaction_b=params.reaction_b,
                         dx=params.dx, dt=params.dt)

    distance_rows, mstar_rows = [], []
    if family in ("carleman", "both"):
        for n in carleman_sites:
            matrix = assemble_carleman_sparse(operator_for_params(sized(n), truncation))
            d_rows, m_rows = _expansion_rows("carleman", n, truncation, matrix, epsilons)
            distance_rows += d_rows
            mstar_rows += m_rows
    if family in ("linear", "both"):
        for q in linear_qubits:
            d_rows, m_rows = _expansion_rows("linear", 2**q, "", build_linear_matrix(sized(2**q)),
                                             epsilons)
            distance_rows += d_rows
            mstar_rows += m_rows

    columns_d = ["family", "N", "K", "q", "m", "nnz", "m_fraction", "d"]
    columns_m = ["family", "N", "K", "q", "epsilon", "m_star", "n_terms", "nnz"]
    write_csv(out / "pauli_distance.csv", metadata, columns_d, distance_rows)
    write_csv(out / "pauli_mstar.csv", metadata, columns_m, mstar_rows)


# --- p0 scan -----------------------------------------------------------------------


def _p0_point(n_sites, sim_encoder, site, gammas):
    ga, gd, gr = gammas
    step = CirculantStep.from_gammas(n_sites, gd, ga, gr)
    report = check_applicability(step)
    if not report.all_strict:
        return (ga, gd, gr, None, None, None, None, 0)
    p_loc = p0_analytic_circulant(step, localized_amplitudes(n_sites, site))
    p_uni = p0_analytic_circulant(step, uniform_amplitudes(n_sites))
    sim_loc = sim_uni = None
    if sim_encoder:
        encoding = build_be_circuit_L(step)
        _, sim_loc = simulate_be(encoding, localized_amplitudes(n_sites, site))
        _, sim_uni = simulate_be(encoding, uniform_amplitudes(n_sites))
    return (ga, gd, gr, p_loc, p_uni, sim_loc, sim_uni, 1)


def run_p0_scan(config: Config, out_dir: str | Path) -> None:
    """Post-selection probability over a (gamma_adv, gamma_diff, gamma_re) grid."""
    out = Path(out_dir)
    metadata = _base_metadata(config, "p0scan")
    n_sites = config.get_int("scan.n_sites", 100)
    gamma_adv = config.get_floats("scan.gamma_adv", "linspace:0.0:0.9:10")
    gamma_diff = config.get_floats("scan.gamma_diff", "linspace:0.0:0.9:10")
    gamma_re = config.get_floats("scan.gamma_re", "0.01")
    site = config.get_int("scan.localized_site", 0)
    simulate = config.get_bool("scan.simulate", True)
    if not 0 <= site < n_sites:
        raise ConfigError("scan.localized_site out of range")
    workers = thread_count()
    metadata.update({
        "scan.n_sites": n_sites,
        "scan.gamma_adv": " ".join(format_cell(g) for g in gamma_adv),
        "scan.gamma_diff": " ".join(format_cell(g) for g in gamma_diff),
        "scan.gamma_re": " ".join(format_cell(g) for g in gamma_re),
        "scan.localized_site": site,
        "scan.simulate": simulate,
        "threads": workers,
    })
    config.reject_unknown()

    # the simulated cross-check column only exists on a power-of-two lattice
    sim_here = simulate and n_sites == 8
    metadata["simulated_columns"] = sim_here
    grid = [(ga, gd, gr) for gr in gamma_re for gd in gamma_diff for ga in gamma_adv]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda g: _p0_point(n_sites, sim_here, site, g), grid))
    else:
        rows = [_p0_point(n_sites, sim_here, site, g) for g in grid]

    columns = ["gamma_adv", "gamma_diff", "gamma_re", "p0_localized", "p0_uniform",
               "p0_sim_localized", "p0_sim_uniform", "applicable"]
    write_csv(out / "p0_scan.csv", metadata, columns, rows)

    if sim_here:
        for row in rows:
            if row[7] != 1:
                continue
            for analytic, simulated in ((row[3], row[5]), (row[4], row[6])):
                if abs(analytic - simulated) > PROBABILITY_TOL:
                    raise ToleranceError(
                        f"simulated p0 {simulated} deviates from analytic {analytic}")


# --- block-encoding verification ----------------------------------------------------


def _draw_valid_gammas(rng) -> tuple[float, float, float]:
    while True:
        gd = rng.uniform(0.0, 0.8)
        ga = rng.uniform(0.0, 1.8)
        gr = rng.uniform(0.001, 0.9)
        step = CirculantStep.from_gammas(2, gd, ga, gr)
        if check_applicability(step).all_strict:
            return gd, ga, gr


def _random_states(rng, dim, count):
    states = rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))
    return states / np.linalg.norm(states, axis=1, keepdims=True)


def run_be_verify(config: Config, out_dir: str | Path) -> None:
    """Residual and probability checks of both encodings against dense oracles.

    Every row must satisfy max_component_err <= 1e-11 and the probability
    pair must agree to 1e-12, otherwise the run fails with a tolerance error
    (the CSV is still written first).
    """
    out = Path(out_dir)
    metadata = _base_metadata(config, "beverify")
    seed = config.get_int("seed", 0)
    l_sites = config.get_ints("be.l_sites", "2,4,8")
    l_draws = config.get_int("be.l_draws", 50)
    l_states = config.get_int("be.l_states", 20)
    b_sites = config.get_ints("be.b_sites", "2,4")
    b_dts = config.get_floats("be.b_dts", "0.0,0.006,0.5")
    b_states = config.get_int("be.b_states", 20)
    dt_zero = config.get_bool("be.dt_zero", True)
    metadata.update({
        "seed": seed,
        "be.l_sites": " ".join(str(n) for n in l_sites),
        "be.l_draws": l_draws,
        "be.l_states": l_states,
        "be.b_sites": " ".join(str(n) for n in b_sites),
        "be.b_dts": " ".join(format_cell(v) for v in b_dts),
        "be.b_states": b_states,
        "be.dt_zero": dt_zero,
        "tol_component": COMPONENT_TOL,
        "tol_probability": PROBABILITY_TOL,
    })
    config.reject_unknown()
    for n in l_sites:
        if n & (n - 1) or not 2 <= n <= 32:
            raise ConfigError(f"be.l_sites entries must be powers of two in [2, 32], got {n}")
    for n in b_sites:
        if n & (n - 1) or not 2 <= n <= 8:
            raise ConfigError(f"be.b_sites entries must be powers of two in [2, 8], got {n}")

    rng = np.random.default_rng(seed)
    rows = []

    def check_case(case, n, encoding, target, states, analytic_p0):
        worst_err = 0.0
        worst_pair = (np.nan, np.nan)
        worst_gap = -1.0
        for psi in states:
            residual, prob = simulate_be(encoding, psi)
            err = float(np.abs(residual * encoding.scale - target @ psi).max())
            worst_err = max(worst_err, err)
            expected = analytic_p0(psi)
            gap = abs(prob - expected)
            if gap > worst_gap:
                worst_gap, worst_pair = gap, (prob, expected)
        rows.append((case, n, worst_err, worst_pair[0], worst_pair[1]))

    for n in l_sites:
        for draw in range(l_draws):
            gd, ga, gr = _draw_valid_gammas(rng)
            step = CirculantStep.from_gammas(n, gd, ga, gr)
            encoding = build_be_circuit_L(step)
            states = _random_states(rng, n, l_states)
            check_case(f"L_draw{draw:02d}", n, encoding, step.matrix(), states,
                       lambda psi, s=step: p0_analytic_circulant(s, psi))
        if dt_zero:
            step = CirculantStep.from_gammas(n, 0.0, 0.0, 0.0)
            encoding = build_be_circuit_L(step)
            states = _random_states(rng, n, l_states)
            check_case("L_dt0", n, encoding, np.eye(n), states, lambda psi: 1.0 / 16.0)

    for n in b_sites:
        for b_dt in b_dts:
            coupling = QuadraticCoupling(n, b_dt)
            encoding = build_be_circuit_B(coupling)
            target = coupling.matrix()
            states = _random_states(rng, coupling.padded_dim, b_states)
            check_case(f"B_bdt{b_dt!r}", n, encoding, target, states,
                       lambda psi, t=target: float(np.linalg.norm(t @ psi) ** 2) / 4.0)
            # state concentrated on one doubled slot hits the peak probability
            peak_state = np.zeros(coupling.padded_dim, dtype=complex)
            peak_state[coupling.diagonal_slots()[-1]] = 1.0
            check_case(f"B_peak_bdt{b_dt!r}", n, encoding, target, [peak_state],
                       lambda psi, c=coupling: c.peak_probability())

    write_csv(out / "be_verify.csv", metadata,
              ["case", "N", "max_component_err", "p0_sim", "p0_analytic"], rows)

    for case, n, err, p_sim, p_ana in rows:
        if err > COMPONENT_TOL:
            raise ToleranceError(f"{case} N={n}: component error {err} above {COMPONENT_TOL}")
        if abs(p_sim - p_ana) > PROBABILITY_TOL:
            raise ToleranceError(f"{case} N={n}: probability gap {abs(p_sim - p_ana)}")


RUNNERS = {
    "convergence": run_convergence,
    "pauli": run_pauli,
    "p0scan": run_p0_scan,
    "beverify": run_be_verify,
}
