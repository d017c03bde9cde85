"""Discrete-time C-V2X mode-4 scheduling simulator.

Semi-persistent sensing-based reservations on a primary sub-band plus blind
CAM replicas on auxiliary sub-bands, evaluated by SINR and packet reception
ratio over vehicle traces.
"""

from .config import RunConfig, load_config, loads_config
from .engine import SimulationResult, run
from .trace import generate_synthetic, load_trace, load_trace_file

__version__ = "0.1.0"

__all__ = ["RunConfig", "SimulationResult", "generate_synthetic", "load_config",
           "load_trace", "load_trace_file", "loads_config", "run"]
