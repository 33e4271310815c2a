import sys

from modelnorm.cli import main

sys.exit(main())
