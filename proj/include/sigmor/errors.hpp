#ifndef SIGMOR_ERRORS_HPP
#define SIGMOR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sigmor
{

/// Inconsistent matrix/vector shapes or invalid arguments to a numerical routine.
class ShapeError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerics themselves (divergence, rank loss, ...).
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A time integration produced a non-finite state or left the admissible ball.
class DivergenceError : public NumericalError
{
public:
    DivergenceError(const std::string& what, long step, double time)
        : NumericalError(what), m_step(step), m_time(time)
    {
    }

    long step() const noexcept { return m_step; }
    double time() const noexcept { return m_time; }

private:
    long m_step;
    double m_time;
};

class RankDeficientError : public NumericalError
{
public:
    RankDeficientError(const std::string& what, long effective_rank)
        : NumericalError(what), m_rank(effective_rank)
    {
    }

    long effective_rank() const noexcept { return m_rank; }

private:
    long m_rank;
};

class NonNilpotentError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::runtime_error("config key '" + key + "': " + what), m_key(key)
    {
    }

    const std::string& key() const noexcept { return m_key; }

private:
    std::string m_key;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace sigmor

#endif
