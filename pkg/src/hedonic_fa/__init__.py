"""Welfare-maximizing coalition formation under friends appreciation."""

from .core import ContractError, Instance, Model, Partition, TwoPartition, Welfare, social_welfare, utility

__all__ = ["ContractError", "Instance", "Model", "Partition", "TwoPartition", "Welfare", "social_welfare", "utility"]
