"""Finite quantum phase-space toolkit.

Submodules: :mod:`qps.kinematics`, :mod:`qps.weyl_wigner`,
:mod:`qps.oscillator`, :mod:`qps.measurement`, :mod:`qps.geometry`,
:mod:`qps.modular`, :mod:`qps.experiments` and :mod:`qps.cli`.
"""
from . import exceptions, experiments, geometry, kinematics, measurement, modular, oscillator, weyl_wigner

__all__ = ["exceptions", "experiments", "geometry", "kinematics", "measurement",
           "modular", "oscillator", "weyl_wigner"]
__version__ = "0.1.0"
