from setuptools import setup

setup(use_scm_version={"write_to": "boundary_lab/_version.py"})
