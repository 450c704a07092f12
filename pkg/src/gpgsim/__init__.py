"""Collective-spin simulator for geometric-phase-gate control.

Modules:

* ``dicke``      exact Dicke-subspace linear algebra and brute-force oracles
* ``gpg``        geometric phase gates and composite phasing schedules
* ``grover``     amplitude-amplified Dicke-state preparation
* ``metrology``  precision analysis for collective-rotation sensing
* ``noise``      exact mode-decay channels and process-fidelity bounds
* ``decoupling`` filter functions, dephasing integrals, ordering search
* ``ancilla``    ancilla-controlled circuits for error-tolerant probe states
* ``synthesis``  variational state/unitary synthesis from the gate set
* ``cli``        batch experiment harness emitting CSV/JSON reports
"""

__version__ = "0.1.0"
