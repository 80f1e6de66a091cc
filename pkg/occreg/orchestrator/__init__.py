"""Pipeline de odometria."""
from .odometry import FrameResult, OdometryPipeline, OdometryState, SequenceRun, run_sequence
from .prefetch import prefetch

__all__ = ['FrameResult', 'OdometryPipeline', 'OdometryState', 'SequenceRun', 'run_sequence', 'prefetch']
