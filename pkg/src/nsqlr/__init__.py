"""Quasi-likelihood ratio tests for nonsynchronously observed 2-d diffusions."""

from nsqlr.model import ModelSpec, ParamPoint, get_model, eval_drift, eval_diffusion
from nsqlr.grid import ObservationGrid, OverlapStructure, gen_poisson_grid, build_overlaps
from nsqlr.simulate import NonsyncData, simulate_and_sample
from nsqlr.likelihood import (
    BlockPartition,
    QuasiLikelihood,
    assemble_S,
    drift_increments,
    h1,
    h2,
    joint_h,
    log_det_fast,
    make_blocks,
)
from nsqlr.optimize import OptProblem, maximize
from nsqlr.lrt import TestOutcome, chi2_quantile, chi2_sf, lr_joint, test_sigma, test_theta
from nsqlr.hy import HYResult, hy_estimator, u_n_variance, v_n_test
from nsqlr.experiment import ExperimentConfig, ExperimentReport, ks_statistic, run_experiment

__version__ = "0.1.0"
