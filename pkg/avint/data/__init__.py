from . import models
from . import reader
from .models import BUILTIN_MODELS, fetch_model
from .reader import model_from_dict, model_to_dict, parse_model, save_model
