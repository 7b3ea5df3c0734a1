"""RoPE length-extrapolation toolkit: strategies, frequency diagnostics,
encoding-level aliasing scans and the NoRepeat video metric."""

from .aliasing import (
    AliasScanParams,
    SimilarityReport,
    propose_observed_n,
    scan_first_alias,
    signature_matrix,
    strategy_report,
)
from .diagnostics import (
    check_non_repetition,
    diagnostics_table,
    identify_intrinsic,
    motion_proxy,
    period,
    repeat_count,
)
from .norepeat import FrameSequence, NoRepeatConfig, aggregate, norepeat_score
from .rope import (
    AxisRope,
    FrequencySpec,
    ModelRopeConfig,
    PositionVector,
    apply_rope,
    apply_rope_multi,
    make_frequencies,
    positional_signature,
    rope_dot,
)
from .strategies import (
    ExtrapolationParams,
    StrategyCall,
    StrategyResult,
    TasrParams,
    YarnParams,
    apply_strategy_multi,
    ntk,
    pe,
    pi,
    riflex,
    riflex_all_low,
    riflex_base_form,
    tasr,
    yarn,
)

__version__ = "0.1.0"
