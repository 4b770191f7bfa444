"""Orthogonal codes for fading and state-dependent channels with transmitter CSI."""
from .channel import CsitQuality, ExponentialTail, PolynomialTail, Rayleigh, RngStream
from .dmc import DiscreteChannelSpec, capacity_per_unit_cost, channel_from_dict, load_channel
from .equivalence import TiltedDesign, equivalence_check, optimize_noncausal
from .ppm import PpmCodeParams, PpmOutcome, ppm_simulate
from .wideband import WidebandParams, achievable_rate, simulate_trials

__version__ = "0.1.0"
