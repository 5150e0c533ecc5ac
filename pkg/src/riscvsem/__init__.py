"""RISC-V instruction semantics written once against an abstract machine
interface, with a simulator, a software-multiply differential harness and a
weak-memory litmus checker built on top."""

__version__ = "0.1.0"
