// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef NFTB_ERRORS_HPP
#define NFTB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nftb
{
    // Bad or inconsistent configuration values. CLI exit code 2.
    class config_error : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Input files that fail validation (schema, checksum, version). CLI exit code 3.
    class data_error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Non-finite values or broken numerical preconditions. CLI exit code 4.
    class numerical_error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}

#endif
