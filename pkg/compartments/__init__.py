from .builtins import BUILTINS, builtin, generalized_sir, model_from_dict, seir, sir, sir_vacc_i, sir_vacc_s, sir_vital, sirs_endemic
from .models import CanonicalSystem, CompartmentalModel, Flow, OdeSystem, canonical_poisson, to_ode
from .rescaling import NonconstantSir, nonconstant_sir, rescale_nonconstant
