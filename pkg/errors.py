# Copyright 2025 Andrew Hundt
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exception hierarchy shared by every cantorstar module.

Core modules raise these; only the CLI catches them and turns them into exit
codes and the machine-readable failure JSON on stderr.
"""


class WorkbenchError(Exception):
    """Base class for every error cantorstar raises on purpose."""

    #: Exit code the CLI uses when this error escapes a subcommand.
    exit_code = 2


class GroupMismatchError(WorkbenchError):
    """Two operands live in different groups."""


class EnumerationTooLargeError(WorkbenchError):
    """An exhaustive enumeration was requested beyond its configured bound."""


class PreconditionError(WorkbenchError):
    """An operation was called outside its documented precondition."""


class NotNowhereDenseError(PreconditionError):
    """No nowhere-density gap exists within the depth of the trace."""


class PorosityError(PreconditionError):
    """A tree is not k-porous where a construction needs it to be."""


class MaskStarvationError(PreconditionError):
    """The zero mask leaves no mask-free run of the needed length within the depth budget."""


class ScheduleMismatchError(WorkbenchError):
    """A cover's length schedule disagrees with the schedule the construction requires."""


class FormatError(WorkbenchError):
    """A file, flag value, or serialized value could not be parsed."""


class UnknownPresetError(FormatError):
    """A zero-mask preset name is not registered."""


class IndexCollisionError(WorkbenchError):
    """Two refinement levels were assigned the same cover index."""

    exit_code = 1


class ConsistencyError(WorkbenchError):
    """Two independent computations of the same quantity disagree."""

    exit_code = 1
