"""Declarative experiment descriptions: one TOML document per scenario.

Parsing is strict: unknown keys are rejected, defaults are applied and
echoed back through Scenario.effective_toml(), and every cross-field rule
(bank size, init dimensions, horizon positivity, ...) is checked before a
Scenario is handed to the runner.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

__all__ = [
    "ScenarioError",
    "PlantConfig",
    "NoiseConfig",
    "EstimatorConfig",
    "ControllerConfig",
    "OutputConfig",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "bundled_scenario_names",
    "resolve_scenario",
]

PLANT_KINDS = ("chain", "underwater", "pendulum_carts")
ESTIMATOR_KINDS = ("state_feedback", "hgo", "switching_hgo", "multi_observer", "mhgo")
CONTROLLER_KINDS = ("zero", "underwater", "pendulum")

_DEFAULT_SEED = 20260808


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; message names the field."""


@dataclass(frozen=True)
class PlantConfig:
    kind: str
    x0: tuple[float, ...]
    a: float = 1.0                      # underwater drag coefficient
    n: int = 2                          # chain dimension
    f_bound: float = 0.0
    # pendulum parameters
    m: float = 1.0
    M: float = 5.0
    spring_arm: float = 0.2
    l: float = 1.0
    k: float = 1.0
    g: float = 9.8


@dataclass(frozen=True)
class NoiseConfig:
    bound: float = 0.0
    sample_period: float = 1e-4


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str
    kappa: tuple[float, ...] = (2.0, 1.0)
    eps: float = 0.15
    init: tuple[float, ...] = ()             # single-observer start
    inits: tuple[tuple[float, ...], ...] = ()  # bank starts
    kappa_fast: tuple[float, ...] = ()
    eps_fast: float = 1e-3
    t_switch: float = 0.1
    gamma: float = 1e3
    beta0: tuple[float, ...] = ()
    freeze_weights: bool = False
    alpha: float = 0.1
    sigma0: int = 1
    nominal_model: str = "none"               # "none" | "plant"


@dataclass(frozen=True)
class ControllerConfig:
    kind: str
    saturation: float
    literal_signs: bool = False


@dataclass(frozen=True)
class OutputConfig:
    stride: int = 10
    band: float = 0.2                  # time-to-band threshold on the max-norm error
    final_window: float = 0.5          # fraction of the horizon treated as steady state


@dataclass(frozen=True)
class Scenario:
    label: str
    horizon: float
    dt_macro: float
    seed: int
    plant: PlantConfig
    noise: NoiseConfig
    estimator: EstimatorConfig
    controller: ControllerConfig
    output: OutputConfig

    @property
    def n_x(self) -> int:
        if self.plant.kind == "pendulum_carts":
            return 4
        if self.plant.kind == "underwater":
            return 2
        return self.plant.n

    @property
    def channel_count(self) -> int:
        return 2 if self.plant.kind == "pendulum_carts" else 1

    @property
    def channel_dim(self) -> int:
        return self.n_x // self.channel_count

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt_macro))

    def effective_toml(self) -> str:
        """Echo of the fully-defaulted scenario, TOML-shaped, for report files."""
        est = self.estimator
        lines = [
            f'label = "{self.label}"',
            f"horizon = {self.horizon!r}",
            f"dt_macro = {self.dt_macro!r}",
            f"seed = {self.seed}",
            "",
            "[plant]",
            f'kind = "{self.plant.kind}"',
            f"x0 = {list(self.plant.x0)!r}",
        ]
        if self.plant.kind == "underwater":
            lines.append(f"a = {self.plant.a!r}")
        if self.plant.kind == "chain":
            lines.append(f"n = {self.plant.n}")
        if self.plant.kind == "pendulum_carts":
            lines += [
                f"m = {self.plant.m!r}",
                f"M = {self.plant.M!r}",
                f"spring_arm = {self.plant.spring_arm!r}",
                f"l = {self.plant.l!r}",
                f"k = {self.plant.k!r}",
                f"g = {self.plant.g!r}",
            ]
        lines += [
            f"f_bound = {self.plant.f_bound!r}",
            "",
            "[noise]",
            f"bound = {self.noise.bound!r}",
            f"sample_period = {self.noise.sample_period!r}",
            "",
            "[estimator]",
            f'kind = "{est.kind}"',
        ]
        if est.kind != "state_feedback":
            lines += [f"kappa = {list(est.kappa)!r}", f"eps = {est.eps!r}"]
        if est.kind in ("hgo", "switching_hgo"):
            lines.append(f"init = {list(est.init)!r}")
            lines.append(f'nominal_model = "{est.nominal_model}"')
        if est.kind == "switching_hgo":
            lines += [
                f"kappa_fast = {list(est.kappa_fast)!r}",
                f"eps_fast = {est.eps_fast!r}",
                f"t_switch = {est.t_switch!r}",
            ]
        if est.kind in ("multi_observer", "mhgo"):
            lines.append(f"inits = {[list(v) for v in est.inits]!r}")
        if est.kind == "multi_observer":
            lines += [f"alpha = {est.alpha!r}", f"sigma0 = {est.sigma0}"]
        if est.kind == "mhgo":
            lines += [
                f"gamma = {est.gamma!r}",
                f"beta0 = {list(est.beta0)!r}",
                f"freeze_weights = {str(est.freeze_weights).lower()}",
                f'nominal_model = "{est.nominal_model}"',
            ]
        lines += [
            "",
            "[controller]",
            f'kind = "{self.controller.kind}"',
            f"saturation = {self.controller.saturation!r}",
        ]
        if self.controller.kind == "underwater":
            lines.append(f"literal_signs = {str(self.controller.literal_signs).lower()}")
        lines += [
            "",
            "[output]",
            f"stride = {self.output.stride}",
            f"band = {self.output.band!r}",
            f"final_window = {self.output.final_window!r}",
        ]
        return "\n".join(lines) + "\n"


def _take(table: dict, section: str, allowed: dict):
    """Pop known keys with type coercion; reject anything left over."""
    out = {}
    for key, (kind, default) in allowed.items():
        if key in table:
            raw = table.pop(key)
            try:
                out[key] = kind(raw)
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"field '{key}' in [{section}]: {exc}") from exc
        elif default is not _REQUIRED:
            out[key] = default
        else:
            raise ScenarioError(f"missing required field '{key}' in [{section}]")
    if table:
        unknown = ", ".join(sorted(table))
        raise ScenarioError(f"unknown key(s) in [{section}]: {unknown}")
    return out


class _Required:
    pass


_REQUIRED = _Required()


def _strict_bool(v) -> bool:
    if not isinstance(v, bool):
        raise ValueError(f"expected a boolean, got {v!r}")
    return v


def _strict_int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected an integer, got {v!r}")
    if isinstance(v, float) and v != int(v):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def _floats(v) -> tuple[float, ...]:
    return tuple(float(x) for x in v)


def _vectors(v) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(x) for x in row) for row in v)


def _grid_inits(spec: dict) -> list[list[float]]:
    spec = dict(spec)
    allowed = {"x1", "x2", "counts"}
    unknown = set(spec) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) in inits_grid: {', '.join(sorted(unknown))}")
    try:
        lo1, hi1 = (float(v) for v in spec["x1"])
        lo2, hi2 = (float(v) for v in spec["x2"])
        c1, c2 = (int(v) for v in spec["counts"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed inits_grid: {exc}") from exc
    if c1 < 2 or c2 < 2:
        raise ScenarioError("inits_grid counts must be >= 2")
    out = []
    for i in range(c1):
        v1 = lo1 + (hi1 - lo1) * i / (c1 - 1)
        for j in range(c2):
            v2 = lo2 + (hi2 - lo2) * j / (c2 - 1)
            out.append([v1, v2])
    return out


def parse_scenario(text: str, label_fallback: str = "scenario") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML parse error: {exc}") from exc
    return _build(doc, label_fallback)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; error messages carry the path."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        return parse_scenario(text, label_fallback=path.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _build(doc: dict, label_fallback: str) -> Scenario:
    doc = dict(doc)
    plant_tbl = dict(doc.pop("plant", {}))
    noise_tbl = dict(doc.pop("noise", {}))
    est_tbl = dict(doc.pop("estimator", {}))
    ctrl_tbl = dict(doc.pop("controller", {}))
    out_tbl = dict(doc.pop("output", {}))

    top = _take(
        doc,
        "scenario",
        {
            "label": (str, label_fallback),
            "horizon": (float, _REQUIRED),
            "dt_macro": (float, 1e-4),
            "seed": (_strict_int, _DEFAULT_SEED),
        },
    )
    if top["horizon"] <= 0.0:
        raise ScenarioError("field 'horizon': must be > 0")
    if top["dt_macro"] <= 0.0:
        raise ScenarioError("field 'dt_macro': must be > 0")
    steps = top["horizon"] / top["dt_macro"]
    if abs(steps - round(steps)) > 1e-6 or round(steps) < 1:
        raise ScenarioError("field 'horizon': must be a whole number of macro steps")

    plant = _take(
        plant_tbl,
        "plant",
        {
            "kind": (str, _REQUIRED),
            "x0": (_floats, _REQUIRED),
            "a": (float, 1.0),
            "n": (_strict_int, 2),
            "f_bound": (float, -1.0),
            "m": (float, 1.0),
            "M": (float, 5.0),
            "spring_arm": (float, 0.2),
            "l": (float, 1.0),
            "k": (float, 1.0),
            "g": (float, 9.8),
        },
    )
    if plant["kind"] not in PLANT_KINDS:
        raise ScenarioError(
            f"field 'kind' in [plant]: must be one of {', '.join(PLANT_KINDS)}"
        )
    if plant["f_bound"] < 0.0:
        plant["f_bound"] = {"underwater": 550.0, "pendulum_carts": 350.0, "chain": 0.0}[
            plant["kind"]
        ]
    pc = PlantConfig(**plant)
    n_x = 4 if pc.kind == "pendulum_carts" else (2 if pc.kind == "underwater" else pc.n)
    if pc.n < 1:
        raise ScenarioError("field 'n' in [plant]: must be >= 1")
    if len(pc.x0) != n_x:
        raise ScenarioError(f"field 'x0' in [plant]: expected {n_x} entries")

    noise = _take(
        noise_tbl,
        "noise",
        {"bound": (float, 0.0), "sample_period": (float, 1e-4)},
    )
    if noise["bound"] < 0.0:
        raise ScenarioError("field 'bound' in [noise]: must be >= 0")
    if noise["sample_period"] <= 0.0:
        raise ScenarioError("field 'sample_period' in [noise]: must be > 0")
    nc = NoiseConfig(**noise)

    grid = est_tbl.pop("inits_grid", None)
    anchor = est_tbl.pop("anchor", None)
    est = _take(
        est_tbl,
        "estimator",
        {
            "kind": (str, _REQUIRED),
            "kappa": (_floats, (2.0, 1.0)),
            "eps": (float, 0.15),
            "init": (_floats, ()),
            "inits": (_vectors, ()),
            "kappa_fast": (_floats, ()),
            "eps_fast": (float, 1e-3),
            "t_switch": (float, 0.1),
            "gamma": (float, 1e3),
            "beta0": (_floats, ()),
            "freeze_weights": (_strict_bool, False),
            "alpha": (float, 0.1),
            "sigma0": (_strict_int, 0),
            "nominal_model": (str, "none"),
        },
    )
    if est["kind"] not in ESTIMATOR_KINDS:
        raise ScenarioError(
            f"field 'kind' in [estimator]: must be one of {', '.join(ESTIMATOR_KINDS)}"
        )
    n_chan = n_x // (2 if pc.kind == "pendulum_carts" else 1)
    if grid is not None:
        if est["inits"]:
            raise ScenarioError("give either 'inits' or 'inits_grid', not both")
        if n_chan != 2:
            raise ScenarioError("inits_grid requires two-dimensional channels")
        est["inits"] = _vectors(_grid_inits(grid))
    if anchor is not None:
        anchor = tuple(float(v) for v in anchor)
        inits = list(est["inits"])
        matches = [i for i, v in enumerate(inits) if tuple(v) == anchor]
        if not matches:
            raise ScenarioError("field 'anchor' in [estimator]: no matching init")
        i = matches[0]
        inits[i], inits[-1] = inits[-1], inits[i]
        est["inits"] = tuple(inits)

    ec = EstimatorConfig(**est)
    ec = _validate_estimator(ec, n_chan)

    ctrl = _take(
        ctrl_tbl,
        "controller",
        {
            "kind": (str, ""),
            "saturation": (float, -1.0),
            "literal_signs": (_strict_bool, False),
        },
    )
    if not ctrl["kind"]:
        ctrl["kind"] = {"underwater": "underwater", "pendulum_carts": "pendulum", "chain": "zero"}[
            pc.kind
        ]
    if ctrl["kind"] not in CONTROLLER_KINDS:
        raise ScenarioError(
            f"field 'kind' in [controller]: must be one of {', '.join(CONTROLLER_KINDS)}"
        )
    if ctrl["saturation"] < 0.0:
        ctrl["saturation"] = {"underwater": 500.0, "pendulum": 50.0, "zero": 1.0}[ctrl["kind"]]
    if ctrl["saturation"] <= 0.0:
        raise ScenarioError("field 'saturation' in [controller]: must be > 0")
    if ctrl["kind"] == "underwater" and pc.kind != "underwater":
        raise ScenarioError("underwater controller requires the underwater plant")
    if ctrl["kind"] == "pendulum" and pc.kind != "pendulum_carts":
        raise ScenarioError("pendulum controller requires the pendulum_carts plant")
    cc = ControllerConfig(**ctrl)

    out = _take(
        out_tbl,
        "output",
        {"stride": (_strict_int, 10), "band": (float, 0.2), "final_window": (float, 0.5)},
    )
    if out["stride"] < 1:
        raise ScenarioError("field 'stride' in [output]: must be >= 1")
    if out["band"] <= 0.0:
        raise ScenarioError("field 'band' in [output]: must be > 0")
    if not (0.0 < out["final_window"] < 1.0):
        raise ScenarioError("field 'final_window' in [output]: must lie in (0, 1)")
    oc = OutputConfig(**out)

    return Scenario(
        label=top["label"],
        horizon=top["horizon"],
        dt_macro=top["dt_macro"],
        seed=top["seed"],
        plant=pc,
        noise=nc,
        estimator=ec,
        controller=cc,
        output=oc,
    )


def _validate_estimator(ec: EstimatorConfig, n: int) -> EstimatorConfig:
    from .linalg import is_hurwitz_poly

    if ec.kind == "state_feedback":
        return ec
    if len(ec.kappa) != n:
        raise ScenarioError(f"field 'kappa' in [estimator]: expected {n} coefficients")
    if not is_hurwitz_poly(ec.kappa):
        raise ScenarioError("field 'kappa' in [estimator]: not Hurwitz")
    if not (0.0 < ec.eps <= 1.0):
        raise ScenarioError("field 'eps' in [estimator]: must lie in (0, 1]")
    if ec.nominal_model not in ("none", "plant"):
        raise ScenarioError("field 'nominal_model' in [estimator]: must be 'none' or 'plant'")
    if ec.kind in ("hgo", "switching_hgo"):
        if len(ec.init) != n:
            raise ScenarioError(f"field 'init' in [estimator]: expected {n} entries")
    if ec.kind == "switching_hgo":
        if len(ec.kappa_fast) != n:
            raise ScenarioError(
                f"field 'kappa_fast' in [estimator]: expected {n} coefficients"
            )
        if not is_hurwitz_poly(ec.kappa_fast):
            raise ScenarioError("field 'kappa_fast' in [estimator]: not Hurwitz")
        if not (0.0 < ec.eps_fast <= 1.0):
            raise ScenarioError("field 'eps_fast' in [estimator]: must lie in (0, 1]")
        if ec.t_switch < 0.0:
            raise ScenarioError("field 't_switch' in [estimator]: must be >= 0")
    if ec.kind in ("multi_observer", "mhgo"):
        if not ec.inits:
            raise ScenarioError("field 'inits' in [estimator]: required for bank estimators")
        for row in ec.inits:
            if len(row) != n:
                raise ScenarioError(
                    f"field 'inits' in [estimator]: every init needs {n} entries"
                )
    if ec.kind == "mhgo":
        N = len(ec.inits)
        if N < n + 1:
            raise ScenarioError(f"field 'inits' in [estimator]: N >= n+1 required (N={N}, n={n})")
        if ec.gamma <= 0.0:
            raise ScenarioError("field 'gamma' in [estimator]: must be > 0")
        if ec.beta0 and len(ec.beta0) != N - 1:
            raise ScenarioError(
                f"field 'beta0' in [estimator]: expected {N - 1} entries (last weight implied)"
            )
        if not ec.beta0:
            # equal weights by default when no prior knowledge is declared
            ec = replace(ec, beta0=tuple([1.0 / N] * (N - 1)))
    if ec.kind == "multi_observer":
        N = len(ec.inits)
        if ec.alpha <= 0.0:
            raise ScenarioError("field 'alpha' in [estimator]: must be > 0")
        sigma0 = ec.sigma0 if ec.sigma0 > 0 else N
        if not (1 <= sigma0 <= N):
            raise ScenarioError(
                f"field 'sigma0' in [estimator]: must lie in 1..{N}"
            )
        ec = replace(ec, sigma0=sigma0)
    return ec


def bundled_scenario_names() -> list[str]:
    root = resources.files("hgobank").joinpath("scenarios")
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_scenario(name_or_path) -> Scenario:
    """Load a scenario from a file path or from the bundled set by name."""
    p = Path(str(name_or_path))
    if p.exists():
        return load_scenario(p)
    name = str(name_or_path)
    root = resources.files("hgobank").joinpath("scenarios")
    candidate = root.joinpath(f"{name}.toml")
    if candidate.is_file():
        return parse_scenario(candidate.read_text(), label_fallback=name)
    raise ScenarioError(
        f"scenario '{name_or_path}' is neither a file nor a bundled name "
        f"(bundled: {', '.join(bundled_scenario_names())})"
    )
