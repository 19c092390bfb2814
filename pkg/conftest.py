import os
import sys

# same effect as PYTHONPATH=$(pwd) in the launch scripts
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
