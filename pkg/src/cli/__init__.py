# Command-line front end: instance files, reports and the bundled corpus
from src.cli.commands import cli
