import os
from setuptools import setup, find_packages, Command

class TestCommand(Command):
  description = "Runs unit and functional tests for ftlab."
  user_options = []
  test_modules = ["engine", "noise", "codes", "decoders", "gadgets", "estimator", "fit", "planner", "app"]

  def initialize_options(self):
    self.cwd = None

  def finalize_options(self):
    self.cwd = os.getcwd()

  def run(self):
    assert os.getcwd() == self.cwd, f"Must be in package root: {self.cwd}"
    cmd = "python -m unittest " + ' '.join(f"tests/{x}.py" for x in TestCommand.test_modules) + " -b"
    os.system(cmd)

setup(
  packages = find_packages(where = ".", include = ["ftlab*"]),
  include_package_data = True,
  package_data = {"ftlab": ["grammar.lark", "constants.json", "latin.txt"]},
  cmdclass = {"test": TestCommand},
)
