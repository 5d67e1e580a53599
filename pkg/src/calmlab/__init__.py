"""Coordination-free query computation: Datalog, monotonicity checkers, transducer networks."""
