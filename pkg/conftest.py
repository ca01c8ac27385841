# Lets pytest import the top-level packages (models, helpers, forms) the same way unittest discover does.
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
