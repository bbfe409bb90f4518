from .init_db import initialize_database
from .models import EigenvalueRecord, Run
from .operations import ResultsDatabase
