# models/__init__.py
from .contour import Segment, Arc, BranchSegment, Contour
from .series import PolyRoot, JetSeries
from .instance import Pole, InstanceSpec, DerivedCounts, GenericityReport
from .curve import SurfacePoint, Zero, Chart, HomologyBasis, SpectralCurve
from .differential import RationalTerm, SingularPart, Differential, ThetaParams, PeriodData, BranchJet
from .moduli import CoordinateDirection, ModuliPoint, CoordJacobian, FDResult
from .report import CheckResult, Report

__all__ = [
    'Segment', 'Arc', 'BranchSegment', 'Contour',
    'PolyRoot', 'JetSeries',
    'Pole', 'InstanceSpec', 'DerivedCounts', 'GenericityReport',
    'SurfacePoint', 'Zero', 'Chart', 'HomologyBasis', 'SpectralCurve',
    'RationalTerm', 'SingularPart', 'Differential', 'ThetaParams', 'PeriodData', 'BranchJet',
    'CoordinateDirection', 'ModuliPoint', 'CoordJacobian', 'FDResult',
    'CheckResult', 'Report',
]
