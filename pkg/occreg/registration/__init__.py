"""Registo GICP plano-a-plano."""
from .covariance import estimate_covariances, neighborhood_covariances
from .correspondences import CorrespondenceSet, find_correspondences
from .gicp import (GicpResult, GicpTarget, apply_predicates, gicp_align, objective,
                   objective_gradient, pair_cost, pair_costs)

__all__ = [
    'estimate_covariances', 'neighborhood_covariances',
    'CorrespondenceSet', 'find_correspondences',
    'GicpResult', 'GicpTarget', 'apply_predicates', 'gicp_align', 'objective',
    'objective_gradient', 'pair_cost', 'pair_costs',
]
