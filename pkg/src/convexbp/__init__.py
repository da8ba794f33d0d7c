"""Back-projection inversion of wave and circular-mean data on convex domains."""
from .geometry import ConvexDomain, Disc, Ellipse, ParametricConvex, Superellipse, load_domain, parse_domain
from .phantoms import Bump, GridImage, Phantom, error_metrics, figure_phantom, lattice_for, random_phantom, rasterize
from .forward import MeansData, VWaveData, WaveData, circular_means, v_from_means, wave_from_means
from .inversion import FORMULAS, Reconstruction, backproject, bp_means_a, bp_means_b, bp_wave_a, bp_wave_b
from .radon_hilbert import KernelCache, apply_K, hilbert_pv, kernel_weight

__version__ = "0.1.0"
