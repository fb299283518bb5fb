"""Shared exception types.

Parameter validation raises ValueError at construction time. Contract
violations (a caller driving a state machine outside its designed envelope,
for example more activations in one refresh interval than the interval can
hold) raise ContractViolationError so they are distinguishable from bad
configuration.
"""


class ContractViolationError(RuntimeError):
    """A state machine was driven outside its designed operating envelope."""


class UnreachableTargetError(RuntimeError):
    """No threshold within the activation budget meets the reliability target."""
