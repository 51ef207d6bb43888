import sys

from ensim.cli import main


sys.exit(main())
