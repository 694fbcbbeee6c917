#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <cstring>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>

#include "gpal/dataset.hpp"
#include "gpal/util.hpp"

namespace gpal {

/// Raised when the oracle cannot produce a label. The experiment aborts
/// after flushing all completed records, so the history stays resumable.
struct OracleFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Oracle {
   public:
    virtual ~Oracle() = default;
    virtual double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int index) = 0;
};

class LookupOracle final : public Oracle {
   public:
    explicit LookupOracle(LabelVector labels) : labels_(std::move(labels)) {}

    double label(const Eigen::Ref<const Eigen::RowVectorXd>&, int index) override {
        if (index < 0 || index >= labels_.size())
            throw OracleFailure("lookup oracle: index " + std::to_string(index) +
                                " outside label table");
        return labels_(index);
    }

   private:
    LabelVector labels_;
};

/// Writes the index and (up to 8) feature values to `out` and blocks for
/// one decimal-number line on `in`.
class PromptOracle final : public Oracle {
   public:
    PromptOracle(std::istream& in = std::cin, std::ostream& out = std::cout)
        : in_(in), out_(out) {}

    double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int index) override {
        out_ << "label sample " << index << ": ";
        const Eigen::Index shown = std::min<Eigen::Index>(8, x.size());
        for (Eigen::Index i = 0; i < shown; ++i) {
            if (i) out_ << ", ";
            out_ << format_double(x(i));
        }
        if (x.size() > shown) out_ << ", ...";
        out_ << " ? " << std::flush;
        std::string line;
        if (!std::getline(in_, line)) throw OracleFailure("prompt oracle: no response");
        try {
            return parse_double(line);
        } catch (const std::exception&) {
            throw OracleFailure("prompt oracle: non-numeric response '" + line + "'");
        }
    }

   private:
    std::istream& in_;
    std::ostream& out_;
};

/// One child invocation per query: comma-separated feature values + LF on
/// the child's stdin, one decimal number + LF expected on its stdout.
class CommandOracle final : public Oracle {
   public:
    explicit CommandOracle(std::string command) : command_(std::move(command)) {}

    double label(const Eigen::Ref<const Eigen::RowVectorXd>& x, int index) override {
        std::string request;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (i) request += ',';
            request += format_double(x(i));
        }
        request += '\n';

        int to_child[2];
        int from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw OracleFailure("command oracle: pipe() failed");
        const pid_t pid = fork();
        if (pid < 0) throw OracleFailure("command oracle: fork() failed");
        if (pid == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        ssize_t written = write(to_child[1], request.data(), request.size());
        close(to_child[1]);

        std::string response;
        char buf[256];
        ssize_t n;
        while ((n = read(from_child[0], buf, sizeof(buf))) > 0) response.append(buf, buf + n);
        close(from_child[0]);
        int status = 0;
        waitpid(pid, &status, 0);

        if (written != static_cast<ssize_t>(request.size()))
            throw OracleFailure("command oracle: failed to write query for sample " +
                                std::to_string(index));
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
            throw OracleFailure("command oracle: '" + command_ + "' exited with status " +
                                std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
        while (!response.empty() && (response.back() == '\n' || response.back() == '\r'))
            response.pop_back();
        try {
            return parse_double(response);
        } catch (const std::exception&) {
            throw OracleFailure("command oracle: non-numeric output '" + response + "'");
        }
    }

   private:
    std::string command_;
};

}  // namespace gpal
