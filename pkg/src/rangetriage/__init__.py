"""Toolkit for spotting at-risk students in hands-on cybersecurity exercises.

The pipeline ingests activity logs from two families of exercise platforms,
extracts behavioral features per student session, trains binary classifiers
that predict who is likely to finish unsuccessfully, and serves live risk
rankings to instructors over HTTP.
"""

__version__ = "0.1.0"
