"""Run the service: ``python -m trojandec_service``.

Bind address comes from the environment:
  TROJANDEC_SERVICE_HOST (default 127.0.0.1)
  TROJANDEC_SERVICE_PORT (default 8787)
  TROJANDEC_SERVICE_INPUT_SIZE (default 224)
"""

import os

import uvicorn

from .app import create_app


def main() -> None:
    host = os.environ.get("TROJANDEC_SERVICE_HOST", "127.0.0.1")
    port = int(os.environ.get("TROJANDEC_SERVICE_PORT", "8787"))
    input_size = int(os.environ.get("TROJANDEC_SERVICE_INPUT_SIZE", "224"))
    uvicorn.run(create_app(input_size=input_size), host=host, port=port)


if __name__ == "__main__":
    main()
