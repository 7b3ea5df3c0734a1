"""Length-extrapolation strategies as transforms of a frequency spectrum.

Every strategy takes a :class:`~riflex.rope.FrequencySpec` (or a previous
:class:`StrategyResult`) and returns a new :class:`StrategyResult`; inputs
are never mutated. Indices reported to callers are 1-based.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Union

from .errors import (
    DegenerateDimensionError,
    DegenerateIntrinsicError,
    IndexRangeError,
    InvalidThresholdsError,
    MissingBaseError,
    RiflexError,
    TimestepRangeError,
)
from .rope import AxisRope, FrequencySpec, ModelRopeConfig

STRATEGY_NAMES = ("pe", "pi", "ntk", "yarn", "tasr", "riflex", "riflex-base", "riflex-all-low")

# Published fine-tuned bases for the intrinsic component, per model and axis.
# Documentation constants: the d_prime and latent lengths behind them are not
# public, so they are not re-derived here.
FINETUNED_REFERENCE_BASES = {
    "cogvideox-5b/2x-temporal": {"time": 1e5},
    "hunyuanvideo/2x-temporal": {"time": 560.0},
    "cogvideox-5b/3x-temporal": {"time": 1e6},
    "cogvideox-5b/2x-spatial": {"height": 1e6, "width": 5e4},
    "cogvideox-5b/2x-both": {"time": 1e5, "height": 1e6, "width": 5e4},
}


class YarnAdmissibilityWarning(UserWarning):
    """alpha/beta lie outside [r_min, r_max] of the spectrum being adjusted."""


@dataclass(frozen=True)
class ExtrapolationParams:
    """Training length ``L`` and target length ``L'``.

    ``scale`` defaults to ``target_len / train_len``. :meth:`from_scale` keeps
    a user-given real ``s`` exactly and sets ``target_len`` to ``ceil(L*s)``,
    the number of positions needed to cover the extrapolated range.
    """

    train_len: int
    target_len: int
    scale: Optional[float] = None

    def __post_init__(self):
        if int(self.train_len) != self.train_len or self.train_len < 1:
            raise ValueError(f"train_len must be a positive integer, got {self.train_len!r}")
        if int(self.target_len) != self.target_len or self.target_len < self.train_len:
            raise ValueError(f"target_len must be an integer >= train_len, got {self.target_len!r}")
        if self.scale is None:
            object.__setattr__(self, "scale", self.target_len / self.train_len)
        elif not self.scale >= 1.0:
            raise ValueError(f"scale must be >= 1, got {self.scale!r}")

    @classmethod
    def from_scale(cls, train_len: int, scale: float) -> "ExtrapolationParams":
        scale = float(scale)
        if not scale >= 1.0:
            raise ValueError(f"scale must be >= 1, got {scale!r}")
        exact = train_len * scale
        target = math.ceil(exact - 1e-9 * exact)
        return cls(train_len=train_len, target_len=max(target, train_len), scale=scale)

    @property
    def extrapolated_length(self) -> float:
        """``L * s`` as a real number."""
        return self.train_len * self.scale


@dataclass(frozen=True)
class YarnParams:
    alpha: float = 1.0
    beta: float = 32.0

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise InvalidThresholdsError(f"need alpha < beta, got alpha={self.alpha}, beta={self.beta}")


@dataclass(frozen=True)
class TasrParams:
    total_timesteps: int
    switch_timestep: Optional[int] = None

    def __post_init__(self):
        if self.total_timesteps < 1:
            raise ValueError("total_timesteps must be positive")
        if self.switch_timestep is None:
            object.__setattr__(self, "switch_timestep", self.total_timesteps // 2)
        if not 0 <= self.switch_timestep <= self.total_timesteps:
            raise TimestepRangeError(
                f"switch_timestep must lie in [0, {self.total_timesteps}], got {self.switch_timestep}"
            )


@dataclass(frozen=True)
class StrategyResult:
    strategy_name: str
    d_prime: int
    thetas_old: tuple
    thetas_new: tuple
    base_new: Optional[float] = None
    noop: bool = False
    branch: Optional[str] = None
    notes: tuple = ()
    modified_indices: frozenset = field(init=False)

    def __post_init__(self):
        if len(self.thetas_old) != len(self.thetas_new):
            raise ValueError("old and new spectra differ in length")
        changed = frozenset(j for j, (a, b) in enumerate(zip(self.thetas_old, self.thetas_new), start=1) if a != b)
        object.__setattr__(self, "modified_indices", changed)

    @property
    def spec(self) -> FrequencySpec:
        return FrequencySpec(d_prime=self.d_prime, thetas=self.thetas_new, base=self.base_new)


SpecLike = Union[FrequencySpec, StrategyResult]


def as_spec(spec: SpecLike) -> FrequencySpec:
    return spec.spec if isinstance(spec, StrategyResult) else spec


def _result(name, spec, thetas_new, base_new=None, **kw) -> StrategyResult:
    return StrategyResult(
        strategy_name=name,
        d_prime=spec.d_prime,
        thetas_old=spec.thetas,
        thetas_new=tuple(float(t) for t in thetas_new),
        base_new=base_new,
        **kw,
    )


def _check_k(spec: FrequencySpec, k: int) -> None:
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= spec.n_components:
        raise IndexRangeError(f"k must lie in [1, {spec.n_components}], got {k!r}")


def pe(spec: SpecLike, params: ExtrapolationParams) -> StrategyResult:
    """Position extrapolation: the spectrum is left as trained."""
    spec = as_spec(spec)
    return _result("pe", spec, spec.thetas, base_new=spec.base)


def pi(spec: SpecLike, params: ExtrapolationParams) -> StrategyResult:
    """Position interpolation: every frequency divided by ``s``."""
    spec = as_spec(spec)
    s = params.scale
    if s == 1.0:
        return _result("pi", spec, spec.thetas, base_new=spec.base)
    return _result("pi", spec, [t / s for t in spec.thetas])


def ntk_lambda(scale: float, d_prime: int) -> float:
    if d_prime <= 2:
        raise DegenerateDimensionError("NTK base scaling needs d_prime >= 4")
    return scale ** (d_prime / (d_prime - 2))


def ntk(spec: SpecLike, params: ExtrapolationParams) -> StrategyResult:
    """NTK-aware scaling: the base is multiplied by ``s ** (d'/(d'-2))``."""
    spec = as_spec(spec)
    if spec.base is None:
        raise MissingBaseError("NTK needs a spectrum generated from a known base")
    d = spec.d_prime
    new_base = ntk_lambda(params.scale, d) * spec.base
    thetas = [1.0] + [new_base ** (-2.0 * (j - 1) / d) for j in range(2, d // 2 + 1)]
    return _result("ntk", spec, thetas, base_new=new_base)


def repeat_counts(spec: FrequencySpec, train_len: float) -> list:
    return [train_len * t / (2.0 * math.pi) for t in spec.thetas]


def yarn_gamma(r: float, alpha: float, beta: float) -> float:
    """Blend weight on the unscaled frequency: 1 above ``beta``, 0 below ``alpha``."""
    if r > beta:
        return 1.0
    if r < alpha:
        return 0.0
    return (r - alpha) / (beta - alpha)


def yarn(spec: SpecLike, params: ExtrapolationParams, yarn_params: Optional[YarnParams] = None) -> StrategyResult:
    spec = as_spec(spec)
    yp = yarn_params or YarnParams()
    s = params.scale
    r = repeat_counts(spec, params.train_len)
    notes = ()
    if not (min(r) <= yp.alpha and yp.beta <= max(r)):
        msg = (
            f"YaRN thresholds alpha={yp.alpha}, beta={yp.beta} outside the spectrum's "
            f"repeat-count range [{min(r):.6g}, {max(r):.6g}]"
        )
        warnings.warn(msg, YarnAdmissibilityWarning, stacklevel=2)
        notes = (msg,)
    thetas = []
    for t, rj in zip(spec.thetas, r):
        g = yarn_gamma(rj, yp.alpha, yp.beta)
        thetas.append(g * t + (1.0 - g) * (t / s))
    return _result("yarn", spec, thetas, notes=notes)


def tasr(spec: SpecLike, params: ExtrapolationParams, tasr_params: TasrParams, t: int) -> StrategyResult:
    """Timestep switch: PI while ``t > switch_timestep``, NTK from there down to 0."""
    spec = as_spec(spec)
    if not 0 <= t <= tasr_params.total_timesteps:
        raise TimestepRangeError(f"timestep must lie in [0, {tasr_params.total_timesteps}], got {t}")
    inner = pi(spec, params) if t > tasr_params.switch_timestep else ntk(spec, params)
    return _result("tasr", spec, inner.thetas_new, base_new=inner.base_new, branch=inner.strategy_name)


def riflex_target(params: ExtrapolationParams) -> float:
    """The largest intrinsic frequency that stays within one cycle over ``L*s``."""
    return 2.0 * math.pi / params.extrapolated_length


def riflex(spec: SpecLike, params: ExtrapolationParams, k: int) -> StrategyResult:
    """Lower only component ``k`` to ``2*pi / (L*s)``.

    If ``theta_k`` already satisfies the non-repetition bound the spectrum is
    returned unchanged with ``noop=True``.
    """
    spec = as_spec(spec)
    _check_k(spec, k)
    target = riflex_target(params)
    if spec.theta(k) <= target:
        return _result("riflex", spec, spec.thetas, base_new=spec.base, noop=True)
    thetas = list(spec.thetas)
    thetas[k - 1] = target
    return _result("riflex", spec, thetas)


def riflex_base_for(params: ExtrapolationParams, d_prime: int, k: int) -> float:
    if k == 1:
        raise DegenerateIntrinsicError("theta_1 is 1 for any base; use riflex() to override it directly")
    try:
        return (params.extrapolated_length / (2.0 * math.pi)) ** (d_prime / (2.0 * (k - 1)))
    except OverflowError:
        raise RiflexError(f"base for k={k}, d_prime={d_prime} overflows a double") from None


def riflex_base_form(spec: SpecLike, params: ExtrapolationParams, k: int):
    """Return ``(new_base, result)`` where ``new_base`` puts theta_k on the bound.

    The base is what a checkpoint config would carry; the result itself only
    touches component ``k`` (identical to :func:`riflex`).
    """
    spec = as_spec(spec)
    _check_k(spec, k)
    new_base = riflex_base_for(params, spec.d_prime, k)
    inner = riflex(spec, params, k)
    result = _result(
        "riflex-base", spec, inner.thetas_new, base_new=inner.base_new, noop=inner.noop,
        notes=(f"equivalent base for component {k}: {new_base!r}",),
    )
    return new_base, result


def riflex_all_low(spec: SpecLike, params: ExtrapolationParams, k: int) -> StrategyResult:
    """Rebuild every component ``j >= k`` from the base that puts theta_k on the bound."""
    spec = as_spec(spec)
    _check_k(spec, k)
    new_base = riflex_base_for(params, spec.d_prime, k)
    target = riflex_target(params)
    if spec.theta(k) <= target:
        return _result("riflex-all-low", spec, spec.thetas, base_new=spec.base, noop=True)
    if new_base <= 1.0:
        raise RiflexError(f"L*s = {params.extrapolated_length} must exceed 2*pi for a decreasing tail")
    d = spec.d_prime
    thetas = list(spec.thetas)
    thetas[k - 1] = target
    for j in range(k + 1, spec.n_components + 1):
        thetas[j - 1] = new_base ** (-2.0 * (j - 1) / d)
    return _result("riflex-all-low", spec, thetas, notes=(f"base for j >= {k}: {new_base!r}",))


def riflex_multi(spec: SpecLike, params: ExtrapolationParams, ks) -> StrategyResult:
    """Apply :func:`riflex` at each of several intrinsic indices (experimental)."""
    base_spec = as_spec(spec)
    current = base_spec
    for k in sorted(set(ks)):
        current = riflex(current, params, k).spec
    return _result("riflex", base_spec, current.thetas, notes=("experimental: multiple intrinsic components",))


@dataclass(frozen=True)
class StrategyCall:
    """A strategy name plus everything it needs, for config-driven dispatch."""

    name: str
    params: ExtrapolationParams
    k: Optional[int] = None
    yarn: Optional[YarnParams] = None
    tasr: Optional[TasrParams] = None
    timestep: Optional[int] = None

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.name!r}; expected one of {STRATEGY_NAMES}")
        if self.name.startswith("riflex") and self.k is None:
            raise ValueError(f"strategy {self.name!r} needs an intrinsic index k")
        if self.name == "tasr" and (self.tasr is None or self.timestep is None):
            raise ValueError("strategy 'tasr' needs tasr params and a timestep")

    def run(self, spec: SpecLike) -> StrategyResult:
        return _DISPATCH[self.name](self, spec)


_DISPATCH: Dict[str, Callable[[StrategyCall, SpecLike], StrategyResult]] = {
    "pe": lambda c, s: pe(s, c.params),
    "pi": lambda c, s: pi(s, c.params),
    "ntk": lambda c, s: ntk(s, c.params),
    "yarn": lambda c, s: yarn(s, c.params, c.yarn),
    "tasr": lambda c, s: tasr(s, c.params, c.tasr, c.timestep),
    "riflex": lambda c, s: riflex(s, c.params, c.k),
    "riflex-base": lambda c, s: riflex_base_form(s, c.params, c.k)[1],
    "riflex-all-low": lambda c, s: riflex_all_low(s, c.params, c.k),
}


def apply_strategy_multi(config: ModelRopeConfig, per_axis: Mapping[str, StrategyCall]) -> ModelRopeConfig:
    """Transform each listed axis independently; other axes are copied as-is."""
    for axis_id in per_axis:
        config.axis(axis_id)
    axes = []
    for a in config.axes:
        call = per_axis.get(a.axis_id)
        axes.append(a if call is None else AxisRope(a.axis_id, call.run(a.spec).spec, a.train_len))
    return ModelRopeConfig(tuple(axes))
