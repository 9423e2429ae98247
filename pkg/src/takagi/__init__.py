"""Parameter derivatives of de Rham type singular functions."""
from .core import (Evaluation, ZSeries, delta_kF, eval_F, eval_F_jet, sample_mu0, z_series)
from .dyadic import BinaryPoint, DyadicRational, parse_point
from .jets import Jet
from .params import CurvePoint, ParamCurve, check_nd, classify, dual, matrices, validate

__version__ = "0.1.0"
