"""Wire-protocol bridge from Hugging Face causal LMs to the nextchar engine."""

from .model import BridgeConfig, BridgeError, HostedModel, RequestError
from .server import serve_stdio, serve_tcp

__all__ = ["BridgeConfig", "BridgeError", "HostedModel", "RequestError",
           "serve_stdio", "serve_tcp"]
