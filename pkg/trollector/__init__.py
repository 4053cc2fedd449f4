import os


MODULE_PATH = os.path.abspath(__file__ + "/..")
SETTING_DIR = os.path.join(MODULE_PATH, "defaults")
SCENARIO_DIR = os.path.join(MODULE_PATH, "scenarios")
RESOURCE_DIR = os.path.join(MODULE_PATH, "resource")

__version__ = "0.1.0"
