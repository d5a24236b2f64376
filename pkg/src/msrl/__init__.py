"""Magnetic soft robot simulation and TD3 control.

Subpackages and modules:

* :mod:`msrl.rod`, :mod:`msrl.magnetics`, :mod:`msrl.dissipation`,
  :mod:`msrl.contact`, :mod:`msrl.simulator` -- the Cosserat rod model,
* :mod:`msrl.env` -- the 100 Hz field-control environment,
* :mod:`msrl.td3` and :mod:`msrl.trainer` -- learning,
* :mod:`msrl.config`, :mod:`msrl.waveform`, :mod:`msrl.statics`,
  :mod:`msrl.analysis`, :mod:`msrl.cli` -- configuration and outputs.
"""

__version__ = "0.1.0"
