"""putlab: quantify the privacy-utility trade-off of a tabular dataset by
evaluating classification utility over attribute subsets of configurable
size, under task and row budgets, with batch CLI, checkpoint/recovery,
result verification, and an interactive analysis UI."""

from .dataset import Dataset, clean, parse_arff, parse_csv, project, sample_rows, validate
from .engine import ExperimentSpec, RunControl, run_experiment
from .genset import GenerationPlan, dictionary_stream, plan_stream, random_stream
from .learners import NaiveBayesLearner, TreeLearner, cross_validate, make_learner
from .metrics import TaskResult, pr_auc, roc_auc, sort_results
from .putmodel import LearnerSpec, PutConfig, put_to_partition_size, task_budget
from .tools import autopilot, recover, verify

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExperimentSpec",
    "GenerationPlan",
    "LearnerSpec",
    "NaiveBayesLearner",
    "PutConfig",
    "RunControl",
    "TaskResult",
    "TreeLearner",
    "autopilot",
    "clean",
    "cross_validate",
    "dictionary_stream",
    "make_learner",
    "parse_arff",
    "parse_csv",
    "plan_stream",
    "pr_auc",
    "project",
    "put_to_partition_size",
    "random_stream",
    "recover",
    "roc_auc",
    "run_experiment",
    "sample_rows",
    "sort_results",
    "task_budget",
    "validate",
    "verify",
]
