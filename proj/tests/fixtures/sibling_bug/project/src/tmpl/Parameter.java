package tmpl;

public final class Parameter {
    private final String name;
    private String value;

    public Parameter(String name) {
        this.name = name;
    }

    public String getName() {
        return name;
    }

    public String getValue() {
        return value;
    }

    public void bind(String value) {
        this.value = value;
    }

    public boolean isBound() {
        return value != null;
    }
}
