import sys
import multiprocessing

from bench.cli import main

if __name__ == "__main__":
    # Pyinstaller fix https://stackoverflow.com/questions/32672596/pyinstaller-loads-script-multiple-times
    multiprocessing.freeze_support()

    sys.exit(main())
