"""Physics-informed distillation of probability-flow ODE teachers.

Thin python face over the C++ core: analytic Gaussian-mixture teachers,
EDM-style time grids, reference ODE solvers, the skip-parametrized student
with exact gradients, the distillation residual, the training loop and the
evaluation toolkit.
"""

try:
    from pid_distill._core import *  # noqa: F401,F403
    from pid_distill._core import __version__  # noqa: F401
except ImportError:  # running against a CMake build dir instead of an installed wheel
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
