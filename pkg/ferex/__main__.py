import sys

from ferex.main import main

sys.exit(main())
