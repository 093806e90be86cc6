#!/usr/bin/env python
"""Variable-size GAN command-line utility: census, audit, make_toy, train, generate, evaluate, gradcheck."""
import os
import sys


def _export_thread_flag(argv):
    """Honour ``--threads N`` before settings (and numpy) are loaded."""
    for index, arg in enumerate(argv):
        if arg == '--threads' and index + 1 < len(argv):
            os.environ['ANYSIZE_THREADS'] = argv[index + 1]
        elif arg.startswith('--threads='):
            os.environ['ANYSIZE_THREADS'] = arg.split('=', 1)[1]


def main():
    """Run a pipeline subcommand."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    _export_thread_flag(sys.argv)
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
