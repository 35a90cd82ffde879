from .balance import PopulationBalance, per_population_balance, time_derivative
from .systems import InteractingSystem, couple, couple_from_dict, suffixed
