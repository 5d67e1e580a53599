from .base import (HEARTBEAT, NOOP, MessageSchemaError, Protocol, StepContext,
                   StepInput, StepOutput, System, TransducerState, deliver,
                   next_memory, state_equal, step, tag, untag)
from .protocols import (PROTOCOLS, AdomProtocol, MonoProtocol, ReplProtocol,
                        make_protocol, make_t_adom, make_t_mono, make_t_repl)
