"""Adam with bias correction."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, NonFiniteGradientError


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("Adam betas must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ConfigurationError("Adam epsilon must be positive")


def adam_step(params, grads, state):
    """One Adam update of ``params`` (name -> ndarray) in place.

    Parameters whose gradient is None are left untouched. Raises
    NonFiniteGradientError before modifying anything if any gradient is not
    finite. Returns ``(params, state)``.
    """
    step = state.step_count + 1
    for name, g in grads.items():
        if g is None:
            continue
        if g.shape != params[name].shape:
            raise ConfigurationError(f"gradient shape {g.shape} != parameter {name} {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name, step)
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** step
    corr2 = 1.0 - b2 ** step
    for name, g in grads.items():
        if g is None:
            continue
        p = params[name]
        m = state.first_moment.get(name)
        if m is None:
            m = state.first_moment[name] = np.zeros_like(p)
            state.second_moment[name] = np.zeros_like(p)
        v = state.second_moment[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= (state.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)).astype(p.dtype)
    state.step_count = step
    return params, state


class Adam:
    """Optimizer bound to a module's named parameters."""

    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(named_params)
        self.state = AdamState(lr, beta1, beta2, eps)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        arrays = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items()}
        adam_step(arrays, grads, self.state)
