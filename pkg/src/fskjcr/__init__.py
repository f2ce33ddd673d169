"""FSK joint communications and radar waveforms: ambiguity analysis, sidelobe statistics,
PSL phase optimization and link simulation."""

from .ambiguity import (
    AfSurface,
    GridPoint,
    GridSidelobeMap,
    complex_af,
    domain_points,
    grid_psl,
    grid_sidelobe,
    grid_sidelobe_map,
    local_maxima_psl,
    pulse_caf,
    sampled_af_surface,
    zero_delay_cut,
    zero_doppler_cut,
)
from .comms import (
    ChannelModel,
    Codebook,
    CorrelatorBank,
    SerCurve,
    coherent_fsk_ser,
    correlator_bank,
    detect_coherent,
    detect_joint_ml,
    detect_noncoherent,
    draw_channel,
    noncoherent_fsk_ser,
    simulate_ser,
    snr_at_ser,
    snr_gap,
)
from .core import (
    DomainError,
    FskWaveform,
    SampledEnvelope,
    WaveformSpec,
    freq_sequence_to_index,
    index_to_freq_sequence,
    papr,
    sample_envelope,
)
from .optimizer import (
    BatchResult,
    OptimizationResult,
    OptimizerConfig,
    batch_optimize,
    objective,
    objective_gradient,
    optimize_phases,
)
from .stats import (
    CorrelationReport,
    DiscreteDistribution,
    approx_psl_cdf,
    exhaustive_psl_cdf,
    monte_carlo_psl_cdf,
    sl_correlation_empirical,
    sl_correlation_printed,
    sl_pmf,
    wasserstein1,
)

__version__ = "0.1.0"
