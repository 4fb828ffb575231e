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


#ifndef NFTB_IO_HPP
#define NFTB_IO_HPP

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "mobility.hpp"

namespace nftb
{
    // Shortest text that parses back to the same double.
    inline std::string fmt_double(double v)
    {
        char buf[32];
        for (int prec = 15; prec <= 17; ++prec)
        {
            std::snprintf(buf, sizeof buf, "%.*g", prec, v);
            if (std::strtod(buf, nullptr) == v)
                break;
        }
        return buf;
    }

    inline std::string sha256_hex(std::string_view data)
    {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
        std::ostringstream os;
        for (unsigned int i = 0; i < len; ++i)
            os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
        return os.str();
    }

    inline std::string read_file(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw data_error("cannot open '" + path.string() + "'");
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }

    inline void write_file(const std::filesystem::path &path, std::string_view content)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write '" + path.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw std::runtime_error("write failed for '" + path.string() + "'");
    }

    inline std::vector<std::string> split(std::string_view line, char sep = ',')
    {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (true)
        {
            const auto pos = line.find(sep, start);
            out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos)
                break;
            start = pos + 1;
        }
        return out;
    }

    inline double parse_double(const std::string &s, std::string_view what)
    {
        char *end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size())
            throw data_error("bad number '" + s + "' in " + std::string(what));
        return v;
    }

    inline std::string trajectory_to_csv(const Trajectory &traj)
    {
        std::string out = "t,x,y,v,phi\n";
        for (const auto &s : traj.states)
        {
            out += fmt_double(s.time) + ',' + fmt_double(s.position.x) + ',' + fmt_double(s.position.y) + ',' +
                   fmt_double(s.speed) + ',' + fmt_double(s.direction) + '\n';
        }
        return out;
    }

    inline Trajectory trajectory_from_csv(std::string_view text, std::optional<Category> category = std::nullopt)
    {
        std::istringstream in{std::string(text)};
        std::string line;
        if (!std::getline(in, line) || line != "t,x,y,v,phi")
            throw data_error("trajectory CSV: expected header 't,x,y,v,phi'");
        Trajectory traj;
        traj.category = category;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto f = split(line);
            if (f.size() != 5)
                throw data_error("trajectory CSV: expected 5 columns");
            UEState s;
            s.time = parse_double(f[0], "trajectory t");
            s.position = {parse_double(f[1], "trajectory x"), parse_double(f[2], "trajectory y")};
            s.speed = parse_double(f[3], "trajectory v");
            s.direction = parse_double(f[4], "trajectory phi");
            traj.states.push_back(s);
        }
        if (traj.states.size() < 2)
            throw data_error("trajectory CSV: need at least two states");
        traj.delta = traj.states[1].time - traj.states[0].time;
        for (std::size_t k = 1; k < traj.states.size(); ++k)
        {
            const double dt = traj.states[k].time - traj.states[k - 1].time;
            if (!(dt > 0.0) || std::abs(dt - traj.delta) > 1e-9)
                throw data_error("trajectory CSV: timestamps must increase by a constant step");
        }
        return traj;
    }
}

#endif
