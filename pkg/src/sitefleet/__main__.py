import sys

from .service_api.cli import main

sys.exit(main())
