"""Link-level simulator and closed-form analytics for multi-user massive MIMO
uplinks using irregular, mutually coupled antenna arrays."""

from .array_geometry import (
    AntennaLayout,
    distance_pdf,
    irregularity,
    make_regular,
    make_with_target_zeta,
    pairwise_distance,
    sample_bpp,
)
from .channel_model import (
    ChannelSet,
    CorrelationSpectrum,
    IncidentDirections,
    compose_channel,
    correlation,
    draw_directions,
    draw_large_scale,
    draw_small_scale,
    matrix_correlation_coefficient,
    steering_element,
    steering_matrix,
)
from .closed_form import (
    SpectrumPair,
    SystemParams,
    asymptotic_gain,
    asymptotic_rate,
    asymptotic_ser,
    asymptotic_snr,
    ergodic_gain,
    expected_inverse_xi_sum,
    expected_xi_single,
    outage_closed_form,
    prepare_spectrum,
    rate_lower_bound,
    ser_closed_form,
    sum_rate_lower_bound,
    xi_pdf_multi,
    xi_pdf_single,
)
from .config import ExperimentConfig, load_config
from .em_coupling import (
    CouplingMatrices,
    CouplingParams,
    coupling_for_layout,
    coupling_matrix,
    impedance_matrix,
    mutual_impedance,
)
from .monte_carlo import (
    LinkScenario,
    MetricEstimate,
    eigen_histogram,
    mc_gain,
    mc_outage,
    mc_rate,
    mc_ser,
    mrc_snr,
    zf_snr,
)

__version__ = "0.1.0"
