"""Reward-model training data pipeline and best-of-N evaluation harness
for three-way deductive reasoning benchmarks."""

from .corpus import Corpus, Label, Problem, canonical_labels, load_corpus, save_corpus, synth_corpus
from .errors import PipelineError
from .evaluation import CandidateSet, EvalReport, best_of_n, evaluate, highest_threshold, majority_vote, mv_frequency
from .gateway import BackendConfig, Gateway, GenRequest, GenResponse, load_mock_script
from .pipeline import GenerationRunConfig, PoolStats, assemble_eccot, filter_echoes, run_cot, run_echo
from .prompting import Message, PromptMode, render_cot, render_echo, render_judge
from .reward_export import STEP_TAG, TrainingExample, export_examples, import_examples, to_training_example
from .scorer import OracleScorer, RandomScorer, RemoteScorer, SurrogateScorer, train_surrogate
from .trajectory import Reward, Trajectory, UNPARSED, assign_reward, extract_answer, parse_judge

__version__ = "0.1.0"
