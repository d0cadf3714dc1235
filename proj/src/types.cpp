#include "flutter/types.hpp"

#include <cstdio>

namespace flutter
{
    std::string to_string(SimTime t)
    {
        if (t.is_neg_infinity())
        {
            return "-inf";
        }
        return std::to_string(t.ticks);
    }

    ProcessId ProcessId::server(std::uint32_t index)
    {
        return ProcessId{ProcessKind::Server, index, "s" + std::to_string(index)};
    }

    ProcessId ProcessId::client(std::uint32_t index)
    {
        return ProcessId{ProcessKind::Client, index, "c" + std::to_string(index)};
    }

    ProcessId ProcessId::client(std::uint32_t index, std::string name)
    {
        return ProcessId{ProcessKind::Client, index, std::move(name)};
    }

    std::string label(const ProcessId &p)
    {
        return (p.is_server() ? "s" : "c") + std::to_string(p.index);
    }

    const char *to_string(Value v) noexcept
    {
        return v == Value::True ? "True" : "False";
    }

    namespace
    {
        std::strong_ordering compare_bytes(const Bytes &a, const Bytes &b) noexcept
        {
            // std::string compares through char_traits<char>, which orders as unsigned char.
            const int c = a.compare(b);
            if (c < 0)
            {
                return std::strong_ordering::less;
            }
            if (c > 0)
            {
                return std::strong_ordering::greater;
            }
            return std::strong_ordering::equal;
        }
    }

    std::string render_process(const ProcessId &p)
    {
        std::string out = label(p);
        if (p.name != out)
        {
            out += "/" + quote_bytes(p.name);
        }
        return out;
    }

    std::strong_ordering compare_tuples(const BroadcastTuple &a, const BroadcastTuple &b) noexcept
    {
        if (auto c = a.bet <=> b.bet; c != 0)
        {
            return c;
        }
        if (auto c = compare_bytes(a.client.name, b.client.name); c != 0)
        {
            return c;
        }
        return compare_bytes(a.message, b.message);
    }

    std::strong_ordering operator<=>(const InstanceTag &a, const InstanceTag &b) noexcept
    {
        if (auto c = a.key.index() <=> b.key.index(); c != 0)
        {
            return c;
        }
        if (const auto *n = std::get_if<std::uint64_t>(&a.key))
        {
            return *n <=> std::get<std::uint64_t>(b.key);
        }
        return compare_tuples(std::get<BroadcastTuple>(a.key), std::get<BroadcastTuple>(b.key));
    }

    const char *type_name(const WireMessage &m) noexcept
    {
        static constexpr const char *names[] = {"Suggest", "Time", "Observe", "Message", "Decision"};
        return names[m.index()];
    }

    std::string quote_bytes(const Bytes &b)
    {
        std::string out = "\"";
        for (unsigned char ch : b)
        {
            if (ch == '"' || ch == '\\')
            {
                out += '\\';
                out += static_cast<char>(ch);
            }
            else if (ch < 0x20 || ch >= 0x7f)
            {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\x%02x", ch);
                out += buf;
            }
            else
            {
                out += static_cast<char>(ch);
            }
        }
        out += '"';
        return out;
    }

    std::string render(const BroadcastTuple &t)
    {
        return "(" + render_process(t.client) + ", " + quote_bytes(t.message) + ", " + to_string(t.bet) + ")";
    }

    std::string render(const InstanceTag &tag)
    {
        if (const auto *n = std::get_if<std::uint64_t>(&tag.key))
        {
            return "#" + std::to_string(*n);
        }
        return render(std::get<BroadcastTuple>(tag.key));
    }

    std::string render(const WireMessage &m)
    {
        struct Renderer
        {
            std::string operator()(const wire::Suggest &s) const
            {
                return "Suggest(" + render(s.instance) + ", " + to_string(s.value) + ")";
            }
            std::string operator()(const wire::Time &t) const { return "Time(" + to_string(t.time) + ")"; }
            std::string operator()(const wire::Observe &o) const { return "Observe" + render(o.tuple); }
            std::string operator()(const wire::Message &msg) const
            {
                return "Message(" + quote_bytes(msg.message) + ", " + to_string(msg.bet) + ")";
            }
            std::string operator()(const wire::Decision &d) const
            {
                return "Decision(" + quote_bytes(d.message) + ", " + to_string(d.bet) + ", " + to_string(d.value) + ")";
            }
        };
        return std::visit(Renderer{}, m);
    }
}
