"""Genetic-algorithm training of 3-bit quantized SRM0 spiking networks."""

from .errors import (CheckpointError, DataFormatError, ParameterError, QuantizationError,
                     ShapeError, SrmgaError)
from .evaluate import TaskEvaluator
from .evolve import (GaConfig, GaRunState, Individual, ObjectiveMode, bitflip_mutate,
                     checkpoint_load, checkpoint_save, evolve_generation, objective,
                     rank_probabilities, run_ga, sus_select, uniform_crossover)
from .genome import (QuantScheme, chromosome_length, decode_chromosome, decode_delay,
                     decode_weight, encode_network)
from .srm import (KernelMode, MembraneTrace, QuantizedNetwork, SimParams, epsilon_kernel,
                  rho_kernel, simulate_network, simulate_neuron)
from .tasks import (GrfConfig, SpikePattern, classify_outputs, grf_centers_width, grf_encode,
                    iris_encode, iris_load, kfold_split, xor_patterns)

__version__ = "0.1.0"
