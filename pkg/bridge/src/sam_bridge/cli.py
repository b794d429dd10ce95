"""Command line: `sam-bridge --listen tcp:PORT|stdio --model-path PATH --fake`."""

from __future__ import annotations

import argparse
import logging
import sys

from .fake_model import FakeModel
from .server import serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sam-bridge",
        description="Serve a promptable segmentation model over the wire protocol.",
    )
    parser.add_argument("--listen", default="stdio",
                        help="stdio (default) or tcp:PORT")
    parser.add_argument("--model-path", default=None,
                        help="checkpoint path for the real model")
    parser.add_argument("--model-type", default="vit_h",
                        help="registry key for the real model")
    parser.add_argument("--fake", action="store_true",
                        help="serve the deterministic analytic stub")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)

    if args.fake:
        model = FakeModel()
    elif args.model_path:
        from .real_sam import RealSamModel

        model = RealSamModel(args.model_path, args.model_type, args.device)
    else:
        parser.error("choose --fake or provide --model-path")
        return 2

    if args.listen == "stdio":
        serve_stdio(model)
        return 0
    if args.listen.startswith("tcp:"):
        port = args.listen[4:]
        if not port.isdigit():
            parser.error(f"bad tcp listen spec {args.listen!r}")
            return 2
        serve_tcp(model, int(port))
        return 0
    parser.error(f"unknown listen spec {args.listen!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
