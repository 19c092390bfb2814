from .config import CanonicalConfig, ConstantCoupling, CouplingConfig, ExperimentConfig, load_config
from .commands import cmd_canonical, cmd_entangle, cmd_potential, cmd_simulate, cmd_witness
from .plotting import PlotSpec, emit_plot
from .utils import RunManifest
